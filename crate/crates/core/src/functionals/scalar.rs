//! Scalar state functionals and their gradients.
//!
//! Gradients are expressed in the affine chart `ρ(x) = 𝟙/d + Σ_i x_i S_i`
//! with `S_i = Γ_{i+1}/√d`, the normalized traceless Pauli strings. Each
//! gradient is first formed as an operator `D` with `∂g/∂x_i = tr(S_i D)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::operator::{partial_transpose, HermitianOperator, QuantumState, EIGENVALUE_FLOOR};
use crate::pauli::traceless_coordinates;

/// Eigenvalues below this are exact zeros in spectral formulas.
pub const SPECTRAL_ZERO: f64 = 1e-14;

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(invalid(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// `⟨ψ|ρ|ψ⟩`; linear, so it accepts non-physical inputs.
pub fn fidelity_pure(rho: &HermitianOperator, psi: &[Complex64]) -> Result<f64> {
    check_dims(rho.dim(), psi.len())?;
    let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("target vector has norm² {norm2}")));
    }
    Ok(rho.expectation(psi))
}

/// Squared Uhlmann fidelity `(tr√(√ρ σ √ρ))² = ‖√ρ √σ‖₁²`.
pub fn fidelity_mixed(rho: &QuantumState, sigma: &QuantumState) -> f64 {
    let root = |s: &QuantumState| s.operator().map_spectrum(|l| l.max(0.0).sqrt()).into_matrix();
    let product = root(rho) * root(sigma);
    let nuclear: f64 = product.singular_values().iter().sum();
    (nuclear * nuclear).min(1.0)
}

/// [`fidelity_mixed`] for operators that still need validation.
pub fn fidelity_mixed_checked(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    let rho = QuantumState::new(rho.clone())?;
    let sigma = QuantumState::new(sigma.clone())?;
    Ok(fidelity_mixed(&rho, &sigma))
}

/// `tr ρ²`.
pub fn purity(rho: &HermitianOperator) -> f64 {
    rho.inner(rho)
}

/// `∂/∂x_i tr ρ² = 2 tr(S_i ρ)`.
pub fn purity_gradient(rho: &HermitianOperator) -> Vec<f64> {
    traceless_coordinates(&(rho * 2.0))
}

fn physical_spectrum(rho: &HermitianOperator) -> Result<crate::operator::Eigen> {
    let eig = rho.eigh();
    if eig.values[0] < EIGENVALUE_FLOOR {
        return Err(invalid(format!(
            "functional needs a positive semidefinite input (min eigenvalue {:.3e})",
            eig.values[0]
        )));
    }
    Ok(eig)
}

fn require_full_rank(eig: &crate::operator::Eigen, what: &str) -> Result<()> {
    if eig.values[0] <= SPECTRAL_ZERO {
        return Err(Error::DegenerateGuess(format!(
            "{what} gradient needs a full-rank state (min eigenvalue {:.3e})",
            eig.values[0]
        )));
    }
    Ok(())
}

/// von Neumann entropy `−tr ρ log ρ` (natural log).
pub fn entropy(rho: &HermitianOperator) -> Result<f64> {
    let eig = physical_spectrum(rho)?;
    Ok(-eig
        .values
        .iter()
        .filter(|&&l| l > SPECTRAL_ZERO)
        .map(|l| l * l.ln())
        .sum::<f64>())
}

/// `∂S/∂x_i = −tr[S_i (log ρ − 𝟙)]`; needs a full-rank state.
pub fn entropy_gradient(rho: &HermitianOperator) -> Result<Vec<f64>> {
    let eig = physical_spectrum(rho)?;
    require_full_rank(&eig, "entropy")?;
    let d_op = eig.recompose_with(|l| -(l.ln() - 1.0));
    Ok(traceless_coordinates(&d_op))
}

/// `Σ_i |min(λ_i(ρ^{T_A}), 0)|`. Defined for any Hermitian input.
pub fn negativity(rho: &HermitianOperator, party_a: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho, party_a)?;
    Ok(pt.eigh().values.iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

/// `J_z = ½ Σ_q σ_z^{(q)}`.
pub fn jz_operator(n: usize) -> HermitianOperator {
    let d = 1usize << n;
    let diag: Vec<f64> = (0..d)
        .map(|x| (n as f64 - 2.0 * (x as u32).count_ones() as f64) / 2.0)
        .collect();
    HermitianOperator::from_diagonal(&diag)
}

fn in_eigenbasis(op: &HermitianOperator, vectors: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    vectors.adjoint() * op.matrix() * vectors
}

/// Quantum Fisher information `2 Σ_{jk} (λ_j−λ_k)²/(λ_j+λ_k) |H_jk|²`.
pub fn qfi(rho: &HermitianOperator, h: &HermitianOperator) -> Result<f64> {
    check_dims(rho.dim(), h.dim())?;
    let eig = physical_spectrum(rho)?;
    let hm = in_eigenbasis(h, &eig.vectors);
    let lam = &eig.values;
    let mut acc = 0.0;
    for j in 0..lam.len() {
        for k in 0..lam.len() {
            let s = lam[j] + lam[k];
            if s > SPECTRAL_ZERO {
                acc += (lam[j] - lam[k]).powi(2) / s * hm[(j, k)].norm_sqr();
            }
        }
    }
    Ok(2.0 * acc)
}

/// Operator `D` with `tr(S D) = 4 Σ_{jkl} c_{jkl} H_jk S_kl H_lj`, where
/// `c_{jkl} = (λ_jλ_k + λ_jλ_l + λ_kλ_l − 3λ_j²)/((λ_j+λ_k)(λ_j+λ_l))`.
pub fn qfi_gradient_operator(rho: &HermitianOperator, h: &HermitianOperator) -> Result<HermitianOperator> {
    check_dims(rho.dim(), h.dim())?;
    let eig = physical_spectrum(rho)?;
    require_full_rank(&eig, "QFI")?;
    let hm = in_eigenbasis(h, &eig.vectors);
    let lam = &eig.values;
    let d = lam.len();
    let mut dt = DMatrix::<Complex64>::zeros(d, d);
    for l in 0..d {
        for k in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..d {
                let den = (lam[j] + lam[k]) * (lam[j] + lam[l]);
                if lam[j] + lam[k] <= SPECTRAL_ZERO || lam[j] + lam[l] <= SPECTRAL_ZERO {
                    continue;
                }
                let num = lam[j] * lam[k] + lam[j] * lam[l] + lam[k] * lam[l] - 3.0 * lam[j] * lam[j];
                acc += hm[(l, j)] * hm[(j, k)] * (num / den);
            }
            dt[(l, k)] = acc * 4.0;
        }
    }
    // tr(S D) = Σ_kl S_kl D_lk in the eigenbasis; rotate back.
    Ok(HermitianOperator::hermitize(&eig.vectors * dt * eig.vectors.adjoint()))
}

/// `∂F_Q/∂x_i` over the traceless basis; needs a full-rank state.
pub fn qfi_gradient(rho: &HermitianOperator, h: &HermitianOperator) -> Result<Vec<f64>> {
    Ok(traceless_coordinates(&qfi_gradient_operator(rho, h)?))
}
