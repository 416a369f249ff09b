//! Linear witnesses for convex and concave functionals, their frame
//! decomposition, and one-sided Hoeffding confidence bounds.

use crate::error::{invalid, Error, Result};
use crate::operator::{partial_transpose, HermitianOperator, QuantumState};
use crate::pauli::{from_traceless_coordinates, traceless_coordinates};
use crate::scheme::{FrequencyData, TomographyScheme};

use super::scalar;
use super::{Curvature, FunctionalKind, FunctionalSpec};

/// Blend weight towards `𝟙/d` for rank-deficient anchors.
pub const ANCHOR_REGULARIZATION: f64 = 1e-6;
/// Partial-transpose eigenvalues below this count as negative.
pub const NEGATIVE_EIGEN_TOL: f64 = -1e-12;
/// Allowed error of `Σ_ν l_ν M_ν` against `L`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Which side of the true value `tr(ρL)` bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundDirection {
    Lower,
    Upper,
}

impl BoundDirection {
    fn sign(self) -> f64 {
        match self {
            BoundDirection::Lower => 1.0,
            BoundDirection::Upper => -1.0,
        }
    }
}

/// A fixed operator `L` together with its outcome coefficients `l_ν`.
#[derive(Clone, Debug)]
pub struct WitnessOperator {
    operator: HermitianOperator,
    coefficients: Vec<f64>,
    h_squared: f64,
    anchor: QuantumState,
    direction: BoundDirection,
    trivial: bool,
}

impl WitnessOperator {
    pub fn new(
        operator: HermitianOperator,
        anchor: QuantumState,
        direction: BoundDirection,
        scheme: &TomographyScheme,
    ) -> Result<Self> {
        let (coefficients, h_squared) = frame_coefficients(&operator, scheme)?;
        Ok(Self {
            operator,
            coefficients,
            h_squared,
            anchor,
            direction,
            trivial: false,
        })
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `h² = Σ_s (max_r l_r^s − min_r l_r^s)²`.
    pub fn h_squared(&self) -> f64 {
        self.h_squared
    }

    pub fn anchor(&self) -> &QuantumState {
        &self.anchor
    }

    pub fn direction(&self) -> BoundDirection {
        self.direction
    }

    /// Set when the anchor offered nothing to witness and `L = 0`.
    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    /// `tr(ρL)`.
    pub fn evaluate(&self, rho: &HermitianOperator) -> f64 {
        rho.inner(&self.operator)
    }

    /// `Σ_ν l_ν f_ν`, equal to `tr(ρ̂_LIN L)`.
    pub fn contract(&self, f: &FrequencyData) -> Result<f64> {
        if f.len() != self.coefficients.len() {
            return Err(invalid(format!(
                "{} frequencies for {} witness coefficients",
                f.len(),
                self.coefficients.len()
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(f.frequencies())
            .map(|(l, f)| l * f)
            .sum())
    }

    /// Level-`γ` Hoeffding bound from counted data, `Σ l f ∓ penalty`.
    pub fn confidence_bound(&self, f: &FrequencyData, gamma: f64) -> Result<f64> {
        let events = f
            .events_per_setting()
            .ok_or_else(|| invalid("a confidence bound needs counted data"))?;
        let penalty = hoeffding_penalty(self.h_squared, gamma, events)?;
        Ok(self.contract(f)? - self.direction.sign() * penalty)
    }
}

/// `h²` from per-outcome coefficients grouped by setting.
pub fn h_squared(coefficients: &[f64], outcomes_per_setting: usize) -> f64 {
    coefficients
        .chunks(outcomes_per_setting)
        .map(|c| {
            let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
            (hi - lo).powi(2)
        })
        .sum()
}

/// Canonical dual-frame coefficients `l_ν = tr(A_ν L)` and `h²`.
pub fn frame_coefficients(l: &HermitianOperator, scheme: &TomographyScheme) -> Result<(Vec<f64>, f64)> {
    let coeffs = scheme.frame_coefficients(l)?;
    let rebuilt = scheme.weighted_projector_sum(&coeffs)?;
    let residual = rebuilt.max_abs_diff(l);
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::InternalConsistency(format!(
            "frame decomposition residual {residual:.3e}"
        )));
    }
    let h2 = h_squared(&coeffs, scheme.outcomes_per_setting());
    Ok((coeffs, h2))
}

/// `(1−ε)ρ + ε𝟙/d` with the default `ε`.
pub fn regularize_anchor(guess: &QuantumState) -> QuantumState {
    guess.regularized(ANCHOR_REGULARIZATION)
}

/// Tangent-plane witness `L = l₀𝟙 + Σ_i l_i S_i` at `guess`.
pub fn linearize(spec: &FunctionalSpec, guess: &QuantumState, scheme: &TomographyScheme) -> Result<WitnessOperator> {
    let rho = guess.operator();
    let n = rho.qubits_or_err()?;
    let direction = match spec.curvature() {
        Curvature::Convex => BoundDirection::Lower,
        Curvature::Concave => BoundDirection::Upper,
        Curvature::Linear => {
            return Err(invalid(format!("{} is linear; use its operator directly", spec.label())))
        }
    };
    let (value, grad) = match spec.kind() {
        FunctionalKind::Purity => (scalar::purity(rho), scalar::purity_gradient(rho)),
        FunctionalKind::Entropy => (scalar::entropy(rho)?, scalar::entropy_gradient(rho)?),
        FunctionalKind::Qfi { generator } => (scalar::qfi(rho, generator)?, scalar::qfi_gradient(rho, generator)?),
        FunctionalKind::Negativity { party_a } => return negativity_witness(guess, party_a, scheme),
        FunctionalKind::FidelityPure { .. } | FunctionalKind::FidelityMixed { .. } => {
            return Err(invalid(format!("{} cannot be linearized", spec.label())))
        }
    };
    let x = traceless_coordinates(rho);
    let l0 = value - x.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>();
    let l = from_traceless_coordinates(n, l0, &grad);
    WitnessOperator::new(l, guess.clone(), direction, scheme)
}

/// `L = −Q^{T_A}` with `Q` the projector on the negative eigenspace of
/// `guess^{T_A}`, so that `tr(guess L) = N(guess)` and `tr(ρL) ≤ N(ρ)`.
pub fn negativity_witness(guess: &QuantumState, party_a: &[usize], scheme: &TomographyScheme) -> Result<WitnessOperator> {
    let pt = partial_transpose(guess.operator(), party_a)?;
    let eig = pt.eigh();
    let negative = eig.values.iter().any(|&l| l < NEGATIVE_EIGEN_TOL);
    let q = eig.recompose_with(|l| if l < NEGATIVE_EIGEN_TOL { 1.0 } else { 0.0 });
    let l = &partial_transpose(&q, party_a)? * -1.0;
    let mut w = WitnessOperator::new(l, guess.clone(), BoundDirection::Lower, scheme)?;
    w.trivial = !negative;
    Ok(w)
}

/// Witness for any supported functional. Linear fidelities use their own
/// operator; spectral functionals are anchored at a regularized guess when
/// the guess is rank deficient.
pub fn witness_for(spec: &FunctionalSpec, guess: &QuantumState, scheme: &TomographyScheme) -> Result<WitnessOperator> {
    match spec.kind() {
        FunctionalKind::FidelityPure { target } => WitnessOperator::new(
            HermitianOperator::projector(target),
            guess.clone(),
            BoundDirection::Lower,
            scheme,
        ),
        FunctionalKind::Entropy | FunctionalKind::Qfi { .. } => match linearize(spec, guess, scheme) {
            Err(Error::DegenerateGuess(_)) => linearize(spec, &regularize_anchor(guess), scheme),
            other => other,
        },
        _ => linearize(spec, guess, scheme),
    }
}

/// `√(h² |ln(1−γ)| / (2N_s))`.
pub fn hoeffding_penalty(h_squared: f64, gamma: f64, events_per_setting: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid(format!("confidence level {gamma} outside [0, 1)")));
    }
    if events_per_setting == 0 {
        return Err(invalid("events per setting must be at least 1"));
    }
    if !(h_squared >= 0.0) {
        return Err(invalid(format!("negative span {h_squared}")));
    }
    Ok((h_squared * (1.0 - gamma).ln().abs() / (2.0 * events_per_setting as f64)).sqrt())
}

/// One-sided level-`γ` confidence bound `tr(ρ̂_LIN L) ∓ penalty`: a lower
/// bound for convex functionals, an upper bound for concave ones.
pub fn hoeffding_bound(
    rho_lin: &HermitianOperator,
    witness: &WitnessOperator,
    gamma: f64,
    events_per_setting: u64,
) -> Result<f64> {
    if rho_lin.dim() != witness.operator.dim() {
        return Err(invalid("estimate and witness dimensions differ"));
    }
    let penalty = hoeffding_penalty(witness.h_squared, gamma, events_per_setting)?;
    Ok(witness.evaluate(rho_lin) - witness.direction.sign() * penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::scalar::negativity;
    use crate::pauli::pauli_string;
    use crate::states::{ghz_vector, make_state};
    use crate::testutil::{random_hermitian, random_state};

    fn spec(text: &str, n: usize) -> FunctionalSpec {
        let state = format!("ghz:{n}@F=0.8").parse().unwrap();
        FunctionalSpec::parse(text, &state).unwrap()
    }

    #[test]
    fn identity_has_zero_span() {
        let scheme = TomographyScheme::new(2).unwrap();
        let (l, h2) = frame_coefficients(&HermitianOperator::identity(4), &scheme).unwrap();
        for chunk in l.chunks(4) {
            let hi = chunk.iter().cloned().fold(f64::MIN, f64::max);
            let lo = chunk.iter().cloned().fold(f64::MAX, f64::min);
            assert!(hi - lo < 1e-10);
        }
        assert!(h2 < 1e-20);
    }

    #[test]
    fn sigma_z_coefficients() {
        // A(Z, r) carries σ_z/2 with sign (−1)^r; the X and Y duals carry none.
        let scheme = TomographyScheme::new(1).unwrap();
        let (l, h2) = frame_coefficients(&pauli_string("Z").unwrap(), &scheme).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.0, 1.0, -1.0];
        for (a, b) in l.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{l:?}");
        }
        assert!((h2 - H2_SIGMA_Z).abs() < 1e-12);
    }

    // (1 − (−1))² from the Z setting alone.
    const H2_SIGMA_Z: f64 = 4.0;

    #[test]
    fn random_operator_reconstructs() {
        for n in 1..=3 {
            let scheme = TomographyScheme::new(n).unwrap();
            let l = random_hermitian(n, 40 + n as u64);
            let (c, h2) = frame_coefficients(&l, &scheme).unwrap();
            let rebuilt = scheme.weighted_projector_sum(&c).unwrap();
            assert!(rebuilt.max_abs_diff(&l) < 1e-9);
            assert!((h2 - h_squared(&c, scheme.outcomes_per_setting())).abs() < 1e-15);
        }
    }

    #[test]
    fn hoeffding_arithmetic() {
        let p = hoeffding_penalty(4.0, 0.99, 100).unwrap();
        assert!((p - 0.303_485).abs() < 1e-6, "{p}");
        assert_eq!(hoeffding_penalty(4.0, 0.0, 100).unwrap(), 0.0);
        assert!(hoeffding_penalty(4.0, 1.0, 100).is_err());
        assert!(hoeffding_penalty(4.0, 0.5, 0).is_err());
    }

    #[test]
    fn hoeffding_bound_at_zero_confidence_is_contraction() {
        let scheme = TomographyScheme::new(2).unwrap();
        let guess = random_state(2, 8);
        let w = linearize(&spec("purity", 2), &guess, &scheme).unwrap();
        let rho = random_hermitian(2, 9);
        assert_eq!(hoeffding_bound(&rho, &w, 0.0, 50).unwrap(), w.evaluate(&rho));
    }

    #[test]
    fn purity_at_mixed_anchor() {
        let scheme = TomographyScheme::new(2).unwrap();
        let guess = QuantumState::maximally_mixed(4);
        let w = linearize(&spec("purity", 2), &guess, &scheme).unwrap();
        let expected = &(guess.operator() * 2.0) - &(HermitianOperator::identity(4) * 0.25);
        assert!(w.operator().max_abs_diff(&expected) < 1e-14);
        for seed in 0..100 {
            let rho = random_state(2, seed);
            assert!(w.evaluate(rho.operator()) <= scalar::purity(rho.operator()) + 1e-9);
        }
    }

    #[test]
    fn tangency_and_one_sided_bounds() {
        let scheme = TomographyScheme::new(2).unwrap();
        let texts = ["purity", "entropy", "qfi:jz", "neg:0|1"];
        for (k, text) in texts.iter().enumerate() {
            let s = spec(text, 2);
            let guess = random_state(2, 500 + k as u64);
            let w = linearize(&s, &guess, &scheme).unwrap();
            let g = s.evaluate(guess.operator()).unwrap();
            assert!((w.evaluate(guess.operator()) - g).abs() < 1e-8, "{text}");
            for seed in 0..100 {
                let rho = random_state(2, 9000 + seed);
                let bound = w.evaluate(rho.operator());
                let value = s.evaluate(rho.operator()).unwrap();
                match s.curvature() {
                    Curvature::Convex => assert!(bound <= value + 1e-9, "{text}: {bound} > {value}"),
                    Curvature::Concave => assert!(bound >= value - 1e-9, "{text}: {bound} < {value}"),
                    Curvature::Linear => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn negativity_witness_examples() {
        let scheme = TomographyScheme::new(4).unwrap();
        let ghz = QuantumState::pure(&ghz_vector(4)).unwrap();
        let w = negativity_witness(&ghz, &[0, 1], &scheme).unwrap();
        assert!(!w.is_trivial());
        assert!((w.evaluate(ghz.operator()) - 0.5).abs() < 1e-9);

        let sep = make_state(&"sep:4@F=0.8".parse().unwrap()).unwrap();
        let w = negativity_witness(&sep, &[0, 1], &scheme).unwrap();
        assert!(w.is_trivial());
        assert!(w.operator().frobenius_norm() < 1e-14);
    }

    #[test]
    fn negativity_witness_is_a_lower_bound() {
        let scheme = TomographyScheme::new(2).unwrap();
        let guess = QuantumState::pure(&crate::states::bell_vectors()[0]).unwrap();
        let w = negativity_witness(&guess, &[0], &scheme).unwrap();
        for seed in 0..100 {
            let rho = random_state(2, 300 + seed);
            assert!(w.evaluate(rho.operator()) <= negativity(rho.operator(), &[0]).unwrap() + 1e-9);
        }
    }

    #[test]
    fn spectral_witness_regularizes_pure_anchor() {
        let scheme = TomographyScheme::new(2).unwrap();
        let pure = QuantumState::pure(&ghz_vector(2)).unwrap();
        assert!(matches!(
            linearize(&spec("qfi:jz", 2), &pure, &scheme),
            Err(Error::DegenerateGuess(_))
        ));
        let w = witness_for(&spec("qfi:jz", 2), &pure, &scheme).unwrap();
        assert!(w.anchor().operator().min_eigenvalue() > 0.0);
    }

    #[test]
    fn linear_contraction_matches_lin_estimate() {
        let scheme = TomographyScheme::new(3).unwrap();
        let rho = make_state(&"ghz:3@F=0.7".parse().unwrap()).unwrap();
        let probs = scheme.born_probabilities(&rho).unwrap();
        let mut rng = crate::sampling::SeedPolicy::new(3, 0, "lin").rng();
        let f = crate::sampling::toss_frequencies(&probs, 8, 50, &mut rng).unwrap();
        let lin = crate::scheme::linear_inversion(&f, &scheme).unwrap();
        let w = witness_for(&spec("fid:ghz", 3), &rho, &scheme).unwrap();
        let direct = scalar::fidelity_pure(&lin, &ghz_vector(3)).unwrap();
        assert!((w.contract(&f).unwrap() - direct).abs() < 1e-12);
    }
}
