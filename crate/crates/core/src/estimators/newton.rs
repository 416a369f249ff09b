//! Newton refinement on the face of the state set fixed by the current
//! support.
//!
//! With `ρ = V X V†` for the `r` eigenvectors `V` of the support, every
//! outcome probability is `P_ν = u_ν† X u_ν` with `u_ν = V†φ_ν`, so the target
//! restricted to the face is a smooth concave function of the `r²` real
//! coordinates of `X`. Newton steps there converge where first-order steps
//! crawl along ill-conditioned directions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::operator::HermitianOperator;
use crate::scheme::TomographyScheme;

use super::optimizer::Objective;

/// Eigenvalues above this belong to the support.
const SUPPORT_TOL: f64 = 1e-10;
const MAX_STEPS: usize = 30;

/// Orthonormal Hermitian basis of `r×r` matrices: diagonal units, then
/// `(E_kl + E_lk)/√2` and `i(E_kl − E_lk)/√2` for `k < l`.
struct HermitianBasis {
    r: usize,
    pairs: Vec<(usize, usize)>,
}

impl HermitianBasis {
    fn new(r: usize) -> Self {
        let pairs = (0..r).flat_map(|k| (k + 1..r).map(move |l| (k, l))).collect();
        Self { r, pairs }
    }

    fn len(&self) -> usize {
        self.r * self.r
    }

    /// `u† B_i u` for every basis element.
    fn quadratic(&self, u: &[Complex64], out: &mut [f64]) {
        let r = self.r;
        for k in 0..r {
            out[k] = u[k].norm_sqr();
        }
        let s2 = std::f64::consts::SQRT_2;
        for (j, &(k, l)) in self.pairs.iter().enumerate() {
            let z = u[k].conj() * u[l];
            out[r + 2 * j] = s2 * z.re;
            out[r + 2 * j + 1] = -s2 * z.im;
        }
    }

    fn coordinates(&self, m: &DMatrix<Complex64>) -> DVector<f64> {
        let r = self.r;
        let s2 = std::f64::consts::SQRT_2;
        let mut x = DVector::zeros(self.len());
        for k in 0..r {
            x[k] = m[(k, k)].re;
        }
        for (j, &(k, l)) in self.pairs.iter().enumerate() {
            x[r + 2 * j] = s2 * m[(k, l)].re;
            x[r + 2 * j + 1] = -s2 * m[(l, k)].im;
        }
        x
    }

    fn matrix(&self, x: &DVector<f64>) -> DMatrix<Complex64> {
        let r = self.r;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = DMatrix::zeros(r, r);
        for k in 0..r {
            m[(k, k)] = Complex64::new(x[k], 0.0);
        }
        for (j, &(k, l)) in self.pairs.iter().enumerate() {
            let z = Complex64::new(x[r + 2 * j] * h, x[r + 2 * j + 1] * h);
            m[(k, l)] = z;
            m[(l, k)] = z.conj();
        }
        m
    }

    fn trace_vector(&self) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| if i < self.r { 1.0 } else { 0.0 })
    }
}

fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

/// Maximizes `objective` over states supported on the range of `x`'s
/// significant eigenvectors. Returns `None` when the face is trivial or no
/// step could be taken.
pub(super) fn refine_on_face<O: Objective>(
    objective: &O,
    scheme: &TomographyScheme,
    x: &HermitianOperator,
) -> Option<HermitianOperator> {
    let eig = x.eigh();
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > SUPPORT_TOL).collect();
    let r = keep.len();
    if r < 2 {
        return None;
    }
    let d = x.dim();
    let v = DMatrix::from_fn(d, r, |i, j| eig.vectors[(i, keep[j])]);
    let vh = v.adjoint();
    let basis = HermitianBasis::new(r);
    let m = basis.len();
    let outcomes = scheme.num_outcomes();

    let mut g = DMatrix::<f64>::zeros(outcomes, m);
    let mut row = vec![0.0; m];
    for nu in 0..outcomes {
        let phi = DVector::from_vec(scheme.outcome_vector(nu));
        let u = &vh * phi;
        basis.quadratic(u.as_slice(), &mut row);
        for (i, &val) in row.iter().enumerate() {
            g[(nu, i)] = val;
        }
    }

    let total: f64 = keep.iter().map(|&k| eig.values[k]).sum();
    let x0 = DMatrix::from_fn(r, r, |i, j| {
        if i == j {
            Complex64::new(eig.values[keep[i]] / total, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut coords = basis.coordinates(&x0);
    let mut probs: Vec<f64> = (&g * &coords).iter().copied().collect();
    if !objective.is_interior(&probs) {
        return None;
    }
    let t = basis.trace_vector();
    let mut weights = vec![0.0; outcomes];
    let mut curv = vec![0.0; outcomes];
    let mut moved = false;

    for _ in 0..MAX_STEPS {
        objective.weights(&probs, &mut weights);
        objective.curvature(&probs, &mut curv);
        let grad = g.tr_mul(&DVector::from_column_slice(&weights));
        let active: Vec<usize> = (0..outcomes).filter(|&nu| curv[nu] > 0.0).collect();
        let scaled = DMatrix::from_fn(active.len(), m, |k, i| curv[active[k]].sqrt() * g[(active[k], i)]);
        let mut q = &scaled.transpose() * &scaled;
        let reg = 1e-12 * q.trace().max(f64::MIN_POSITIVE) / m as f64;
        for i in 0..m {
            q[(i, i)] += reg;
        }
        let chol = q.cholesky()?;
        let a = chol.solve(&grad);
        let b = chol.solve(&t);
        let lambda = t.dot(&a) / t.dot(&b);
        let dir = a - b * lambda;
        let decrement = grad.dot(&dir);
        if !(decrement > 0.0) {
            break;
        }
        let dp: Vec<f64> = (&g * &dir).iter().copied().collect();

        let mut alpha = 1.0;
        let accepted = loop {
            if alpha < 1e-10 {
                break false;
            }
            let trial: Vec<f64> = dp.iter().map(|v| alpha * v).collect();
            let next: Vec<f64> = probs.iter().zip(&trial).map(|(p, v)| p + v).collect();
            if objective.is_interior(&next) && min_eigenvalue(&basis.matrix(&(&coords + &dir * alpha))) > 0.0 {
                let rise = objective.increment(&probs, &trial);
                if rise >= 0.25 * alpha * decrement || (rise >= 0.0 && alpha == 1.0) {
                    break true;
                }
            }
            alpha *= 0.5;
        };
        if !accepted {
            break;
        }
        coords += &dir * alpha;
        probs = (&g * &coords).iter().copied().collect();
        moved = true;
        if decrement < 1e-24 {
            break;
        }
    }
    if !moved {
        return None;
    }
    let xm = basis.matrix(&coords);
    let full = &v * xm * &vh;
    Some(HermitianOperator::hermitize(full))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_round_trip_and_quadratic_form() {
        let basis = HermitianBasis::new(3);
        let mut m = DMatrix::<Complex64>::zeros(3, 3);
        let vals = [0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 0.25, 0.05, -0.6];
        let mut k = 0;
        for i in 0..3 {
            m[(i, i)] = Complex64::new(vals[k], 0.0);
            k += 1;
            for j in i + 1..3 {
                m[(i, j)] = Complex64::new(vals[k], vals[k + 1]);
                m[(j, i)] = m[(i, j)].conj();
                k += 2;
            }
        }
        let x = basis.coordinates(&m);
        assert!((basis.matrix(&x) - &m).norm() < 1e-15);
        let u = [Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.2), Complex64::new(0.1, -0.7)];
        let mut q = vec![0.0; 9];
        basis.quadratic(&u, &mut q);
        let uv = DVector::from_column_slice(&u);
        let direct = (uv.adjoint() * &m * &uv)[(0, 0)].re;
        let via: f64 = q.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        assert!((direct - via).abs() < 1e-14);
    }
}
