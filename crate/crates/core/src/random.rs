//! Random Hermitian operators and states (Ginibre ensemble).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::operator::{HermitianOperator, QuantumState};

fn gaussian_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// `(G + G†)/2` with i.i.d. complex Gaussian `G` on `n` qubits.
pub fn gaussian_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianOperator {
    HermitianOperator::hermitize(gaussian_matrix(1 << n, rng))
}

/// Full-rank state `GG†/tr(GG†)`, Hilbert–Schmidt distributed.
pub fn ginibre_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> QuantumState {
    let g = gaussian_matrix(1 << n, rng);
    let m = &g * g.adjoint();
    let tr: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
    QuantumState::new_unchecked(HermitianOperator::hermitize(m.unscale(tr)))
}

/// Haar-random pure state vector on `n` qubits.
pub fn haar_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1usize << n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    v
}
