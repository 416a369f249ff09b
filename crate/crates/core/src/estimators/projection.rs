use crate::operator::{HermitianOperator, QuantumState};

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest unit-trace positive-semidefinite operator in Frobenius norm.
pub fn project_to_physical(h: &HermitianOperator) -> QuantumState {
    let eig = h.eigh();
    let projected = project_to_simplex(&eig.values);
    let vals = crate::operator::Eigen {
        values: projected,
        vectors: eig.vectors,
    };
    QuantumState::new_unchecked(vals.recompose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_hermitian, random_state};

    #[test]
    fn simplex_projection_two_points() {
        assert_eq!(project_to_simplex(&[1.2, -0.2]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.3, 0.3]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diag_example() {
        let out = project_to_physical(&HermitianOperator::from_diagonal(&[1.2, -0.2]));
        assert!(out.operator().max_abs_diff(&HermitianOperator::from_diagonal(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn physical_input_is_fixed_point() {
        let rho = random_state(2, 4);
        let out = project_to_physical(rho.operator());
        assert!(out.operator().max_abs_diff(rho.operator()) < 1e-12);
    }

    #[test]
    fn random_input_becomes_state() {
        for seed in 0..10 {
            let h = random_hermitian(2, seed);
            let out = project_to_physical(&h);
            assert!((out.operator().trace() - 1.0).abs() < 1e-12);
            assert!(out.operator().min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn projection_is_nearest_among_samples() {
        // The projection is no farther from h than any random state.
        let h = random_hermitian(2, 77);
        let proj = project_to_physical(&h);
        let dist = (&h - proj.operator()).frobenius_norm();
        for seed in 0..50 {
            let other = random_state(2, 1000 + seed);
            assert!(dist <= (&h - other.operator()).frobenius_norm() + 1e-12);
        }
    }
}
