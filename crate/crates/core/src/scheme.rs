//! Pauli tomography: `3ⁿ` local settings with `2ⁿ` outcomes each.
//!
//! Outcome `ν = 2ⁿ·s + r` (0-based) flattens setting `s` and outcome `r`.
//! Settings are enumerated lexicographically with `X < Y < Z`, qubit 0 first.
//! Outcome bit `n−1−q` of `r` is qubit `q`'s result, 0 for the `+1` eigenvector.
//!
//! The projector `M_ν = ⊗_q (𝟙 + (−1)^{r_q} σ_{b_q})/2` only overlaps the `2ⁿ`
//! Pauli strings whose non-identity letters agree with the setting, so
//! `B_{ν,μ} = tr(M_ν Γ_μ)/2ⁿ` is stored as one index list per setting plus a
//! shared Walsh–Hadamard sign pattern. `B` has orthogonal columns, which
//! turns the pseudo-inverse into a diagonal rescaling of `Bᵀ`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::operator::{kron_vectors, HermitianOperator, QuantumState};
use crate::pauli::{from_pauli_coefficients, pauli_expectations, pauli_operator, walsh_hadamard, Pauli};

/// Default upper bound on the qubit count.
pub const MAX_QUBITS: usize = 6;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-12;
/// Rounding overshoot of Born probabilities that is silently clipped.
pub const PROBABILITY_CLIP_TOL: f64 = 1e-9;

/// One local measurement setting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Setting {
    pub index: usize,
    pub bases: Vec<Pauli>,
}

impl Setting {
    pub fn label(&self) -> String {
        self.bases.iter().map(|b| b.as_char()).collect()
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The Pauli tomography measurement model with its canonical dual frame.
#[derive(Clone, Debug)]
pub struct TomographyScheme {
    n: usize,
    settings: Vec<Setting>,
    /// `support[s][S]`: Pauli index overlapping setting `s` on qubit subset `S`.
    support: Vec<Vec<usize>>,
    /// Diagonal of `BᵀB`.
    gram: Vec<f64>,
}

impl TomographyScheme {
    /// Builds the scheme for `1 ≤ n ≤ MAX_QUBITS`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_limit(n, MAX_QUBITS)
    }

    /// Builds the scheme with a custom qubit guard.
    pub fn with_limit(n: usize, max_qubits: usize) -> Result<Self> {
        if n == 0 || n > max_qubits {
            return Err(invalid(format!(
                "qubit count {n} outside the supported range 1..={max_qubits}"
            )));
        }
        let n_settings = 3usize.pow(n as u32);
        let d = 1usize << n;
        let settings: Vec<Setting> = (0..n_settings)
            .map(|s| Setting {
                index: s,
                bases: (0..n)
                    .map(|q| [Pauli::X, Pauli::Y, Pauli::Z][(s / 3usize.pow((n - 1 - q) as u32)) % 3])
                    .collect(),
            })
            .collect();
        let support = settings
            .iter()
            .map(|st| {
                (0..d)
                    .map(|subset| {
                        (0..n).fold(0usize, |mu, q| {
                            let digit = if subset >> (n - 1 - q) & 1 == 1 {
                                st.bases[q].digit()
                            } else {
                                0
                            };
                            mu * 4 + digit
                        })
                    })
                    .collect()
            })
            .collect();
        let mut scheme = Self {
            n,
            settings,
            support,
            gram: Vec::new(),
        };
        scheme.gram = scheme.compute_gram()?;
        Ok(scheme)
    }

    /// Accumulates `diag(BᵀB)` and checks that `B` has orthogonal columns and
    /// full column rank.
    fn compute_gram(&self) -> Result<Vec<f64>> {
        let d = self.dim();
        // Columns of different subsets within a setting meet through the sign
        // pattern H[r][S] = (−1)^{|r∧S|}, identical for every setting; columns
        // of distinct Pauli strings never meet outside a shared setting.
        for a in 0..d {
            for b in 0..d {
                let dot: i64 = (0..d).map(|r| walsh_sign(r, a) * walsh_sign(r, b)).sum();
                let expected = if a == b { d as i64 } else { 0 };
                if dot != expected {
                    return Err(Error::IllPosedScheme(format!(
                        "outcome sign pattern is not orthogonal at ({a}, {b})"
                    )));
                }
            }
        }
        let entry2 = 1.0 / (d * d) as f64;
        let mut gram = vec![0.0; d * d];
        for sup in &self.support {
            for &mu in sup {
                gram[mu] += d as f64 * entry2;
            }
        }
        let smax = gram.iter().cloned().fold(0.0, f64::max).sqrt();
        if let Some((mu, g)) = gram
            .iter()
            .enumerate()
            .find(|(_, &g)| g.sqrt() < RANK_TOL * smax)
        {
            return Err(Error::IllPosedScheme(format!(
                "measurement operators do not span Pauli string {mu} (singular value {:.3e})",
                g.sqrt()
            )));
        }
        Ok(gram)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn num_settings(&self) -> usize {
        self.settings.len()
    }

    pub fn outcomes_per_setting(&self) -> usize {
        self.dim()
    }

    pub fn num_outcomes(&self) -> usize {
        self.num_settings() * self.dim()
    }

    /// Flattened index of outcome `r` in setting `s`.
    pub fn outcome_index(&self, s: usize, r: usize) -> usize {
        s * self.dim() + r
    }

    /// Settings index of a label like `"XZY"`.
    pub fn setting_index(&self, label: &str) -> Option<usize> {
        if label.chars().count() != self.n {
            return None;
        }
        label.chars().try_fold(0usize, |acc, c| {
            let digit = match c {
                'X' => 0,
                'Y' => 1,
                'Z' => 2,
                _ => return None,
            };
            Some(acc * 3 + digit)
        })
    }

    /// Singular values of `B`, one per Pauli string.
    pub fn singular_values(&self) -> Vec<f64> {
        self.gram.iter().map(|g| g.sqrt()).collect()
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// `P = B·T` for Pauli expectations `T_μ = tr(ρΓ_μ)`.
    pub(crate) fn apply_b(&self, t: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let scale = 1.0 / d as f64;
        let mut out = vec![0.0; self.num_outcomes()];
        for (s, sup) in self.support.iter().enumerate() {
            let block = &mut out[s * d..(s + 1) * d];
            for (slot, &mu) in block.iter_mut().zip(sup) {
                *slot = t[mu];
            }
            walsh_hadamard(block);
            block.iter_mut().for_each(|x| *x *= scale);
        }
        out
    }

    /// `Bᵀ·w` for a weight per outcome.
    pub(crate) fn apply_bt(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let scale = 1.0 / d as f64;
        let mut out = vec![0.0; d * d];
        let mut block = vec![0.0; d];
        for (s, sup) in self.support.iter().enumerate() {
            block.copy_from_slice(&w[s * d..(s + 1) * d]);
            walsh_hadamard(&mut block);
            for (&mu, &x) in sup.iter().zip(&block) {
                out[mu] += x * scale;
            }
        }
        out
    }

    fn check_outcome_len(&self, len: usize) -> Result<()> {
        if len != self.num_outcomes() {
            return Err(invalid(format!(
                "expected {} outcome values for {} qubits, got {len}",
                self.num_outcomes(),
                self.n
            )));
        }
        Ok(())
    }

    fn check_dim(&self, op: &HermitianOperator) -> Result<()> {
        if op.dim() != self.dim() {
            return Err(invalid(format!(
                "operator dimension {} does not match the {}-qubit scheme",
                op.dim(),
                self.n
            )));
        }
        Ok(())
    }

    /// `tr(op M_ν)` for every outcome, without clipping.
    pub fn outcome_expectations(&self, op: &HermitianOperator) -> Result<Vec<f64>> {
        self.check_dim(op)?;
        Ok(self.apply_b(&pauli_expectations(op)))
    }

    /// `Σ_ν w_ν M_ν` for a weight per outcome.
    pub fn weighted_projector_sum(&self, weights: &[f64]) -> Result<HermitianOperator> {
        self.check_outcome_len(weights.len())?;
        Ok(from_pauli_coefficients(self.n, &self.apply_bt(weights)))
    }

    /// Born probabilities `tr(ρ M_ν)`, clipped to `[0, 1]`.
    pub fn born_probabilities(&self, rho: &QuantumState) -> Result<Vec<f64>> {
        let raw = self.outcome_expectations(rho.operator())?;
        raw.into_iter()
            .enumerate()
            .map(|(nu, p)| {
                if !(-PROBABILITY_CLIP_TOL..=1.0 + PROBABILITY_CLIP_TOL).contains(&p) {
                    return Err(Error::InternalConsistency(format!(
                        "Born probability {p:e} for outcome {nu} is outside [0, 1]"
                    )));
                }
                Ok(p.clamp(0.0, 1.0))
            })
            .collect()
    }

    /// Projector `M_ν`.
    pub fn projector(&self, nu: usize) -> HermitianOperator {
        let mut w = vec![0.0; self.num_outcomes()];
        w[nu] = 1.0;
        from_pauli_coefficients(self.n, &self.apply_bt(&w))
    }

    /// Product eigenvector `|φ_ν⟩` with `M_ν = |φ_ν⟩⟨φ_ν|`. Bit `q` of the
    /// outcome (counting qubit 0 as most significant) selects the `+1` (0)
    /// or `−1` (1) eigenvector on qubit `q`.
    pub fn outcome_vector(&self, nu: usize) -> Vec<Complex64> {
        let d = self.dim();
        let (s, r) = (nu / d, nu % d);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let factors: Vec<Vec<Complex64>> = self.settings[s]
            .bases
            .iter()
            .enumerate()
            .map(|(q, basis)| {
                let minus = (r >> (self.n - 1 - q)) & 1 == 1;
                let sign = if minus { -1.0 } else { 1.0 };
                match basis {
                    Pauli::X => vec![Complex64::new(h, 0.0), Complex64::new(sign * h, 0.0)],
                    Pauli::Y => vec![Complex64::new(h, 0.0), Complex64::new(0.0, sign * h)],
                    _ if minus => vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
                    _ => vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                }
            })
            .collect();
        kron_vectors(&factors)
    }

    /// All projectors, in outcome order.
    pub fn projectors(&self) -> Vec<HermitianOperator> {
        (0..self.num_outcomes()).map(|nu| self.projector(nu)).collect()
    }

    /// Pauli coefficients of `A_ν`, i.e. `A_ν = Σ_μ a_μ Γ_μ`.
    fn dual_coefficients(&self, nu: usize) -> Vec<f64> {
        let d = self.dim();
        let (s, r) = (nu / d, nu % d);
        let mut coeffs = vec![0.0; d * d];
        for (subset, &mu) in self.support[s].iter().enumerate() {
            let b = walsh_sign(r, subset) as f64 / d as f64;
            coeffs[mu] = b / (d as f64 * self.gram[mu]);
        }
        coeffs
    }

    /// Dual-frame operator `A_ν = 2⁻ⁿ Σ_μ (B⁺)_{μν} Γ_μ`.
    pub fn dual_operator(&self, nu: usize) -> HermitianOperator {
        from_pauli_coefficients(self.n, &self.dual_coefficients(nu))
    }

    pub fn dual_frame(&self) -> Vec<HermitianOperator> {
        (0..self.num_outcomes()).map(|nu| self.dual_operator(nu)).collect()
    }

    /// Dense `B` with `B_{ν,μ} = tr(M_ν Γ_μ)/2ⁿ`. Memory grows as `12ⁿ`.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut b = DMatrix::zeros(self.num_outcomes(), d * d);
        for (s, sup) in self.support.iter().enumerate() {
            for r in 0..d {
                for (subset, &mu) in sup.iter().enumerate() {
                    b[(s * d + r, mu)] = walsh_sign(r, subset) as f64 / d as f64;
                }
            }
        }
        b
    }

    /// Dense `B⁺ = (BᵀB)⁻¹Bᵀ`.
    pub fn b_pseudo_inverse(&self) -> DMatrix<f64> {
        let mut bt = self.b_matrix().transpose();
        for (mu, g) in self.gram.iter().enumerate() {
            bt.row_mut(mu).scale_mut(1.0 / g);
        }
        bt
    }

    /// Pauli coefficients of `Σ_ν A_ν f_ν`.
    fn inversion_coefficients(&self, f: &[f64]) -> Vec<f64> {
        let d = self.dim() as f64;
        let mut c = self.apply_bt(f);
        for (cm, g) in c.iter_mut().zip(&self.gram) {
            *cm /= d * g;
        }
        c
    }

    /// `ρ̂ = Σ_ν A_ν f_ν` for raw per-outcome values (no validation of their sums).
    pub fn invert(&self, f: &[f64]) -> Result<HermitianOperator> {
        self.check_outcome_len(f.len())?;
        Ok(from_pauli_coefficients(self.n, &self.inversion_coefficients(f)))
    }

    /// Canonical frame coefficients `l_ν = tr(A_ν L)`, so that `Σ_ν l_ν M_ν = L`.
    pub fn frame_coefficients(&self, l: &HermitianOperator) -> Result<Vec<f64>> {
        self.check_dim(l)?;
        let d = self.dim() as f64;
        let mut t = pauli_expectations(l);
        for (tm, g) in t.iter_mut().zip(&self.gram) {
            *tm /= d * g;
        }
        Ok(self.apply_b(&t))
    }

    /// Largest deviations of the frame identity `Σ_ν A_ν tr(M_ν X) = X` and
    /// the dual identity `Σ_ν tr(A_ν X) M_ν = X` over up to 64 Pauli strings.
    pub fn frame_residuals(&self) -> Result<(f64, f64)> {
        let count = 1usize << (2 * self.n);
        let stride = (count / 64).max(1);
        let (mut frame, mut dual) = (0.0f64, 0.0f64);
        for mu in (0..count).step_by(stride) {
            let x = self.pauli(mu);
            let back = self.invert(&self.outcome_expectations(&x)?)?;
            frame = frame.max(back.max_abs_diff(&x));
            let rebuilt = self.weighted_projector_sum(&self.frame_coefficients(&x)?)?;
            dual = dual.max(rebuilt.max_abs_diff(&x));
        }
        Ok((frame, dual))
    }

    /// Pauli string operator, re-exported for diagnostics.
    pub fn pauli(&self, mu: usize) -> HermitianOperator {
        pauli_operator(self.n, mu)
    }
}

/// `(−1)^{|r ∧ S|}`.
#[inline]
fn walsh_sign(r: usize, subset: usize) -> i64 {
    if (r & subset).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Per-outcome event counts with a uniform number of events per setting.
#[derive(Clone, Debug, PartialEq)]
pub struct Counts {
    pub events_per_setting: u64,
    pub values: Vec<u64>,
}

/// Relative frequencies `f_ν`, optionally backed by integer counts.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyData {
    outcomes_per_setting: usize,
    frequencies: Vec<f64>,
    counts: Option<Counts>,
}

impl FrequencyData {
    /// Validates `Σ_r c_r^s = N_s` for every setting.
    pub fn from_counts(outcomes_per_setting: usize, events_per_setting: u64, counts: Vec<u64>) -> Result<Self> {
        if events_per_setting == 0 {
            return Err(invalid("events per setting must be at least 1"));
        }
        if outcomes_per_setting == 0 || counts.len() % outcomes_per_setting != 0 {
            return Err(invalid(format!(
                "{} counts do not split into settings of {outcomes_per_setting} outcomes",
                counts.len()
            )));
        }
        for (s, chunk) in counts.chunks(outcomes_per_setting).enumerate() {
            let total: u64 = chunk.iter().sum();
            if total != events_per_setting {
                return Err(invalid(format!(
                    "setting {s}: counts sum to {total}, expected {events_per_setting}"
                )));
            }
        }
        let n = events_per_setting as f64;
        Ok(Self {
            outcomes_per_setting,
            frequencies: counts.iter().map(|&c| c as f64 / n).collect(),
            counts: Some(Counts {
                events_per_setting,
                values: counts,
            }),
        })
    }

    /// Frequencies without underlying counts, e.g. exact Born probabilities.
    pub fn from_frequencies(outcomes_per_setting: usize, frequencies: Vec<f64>) -> Result<Self> {
        if outcomes_per_setting == 0 || frequencies.len() % outcomes_per_setting != 0 {
            return Err(invalid("frequency vector does not split into whole settings"));
        }
        for (s, chunk) in frequencies.chunks(outcomes_per_setting).enumerate() {
            if chunk.iter().any(|f| !(0.0..=1.0).contains(f)) {
                return Err(invalid(format!("setting {s}: frequency outside [0, 1]")));
            }
            let total: f64 = chunk.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("setting {s}: frequencies sum to {total}")));
            }
        }
        Ok(Self {
            outcomes_per_setting,
            frequencies,
            counts: None,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn counts(&self) -> Option<&Counts> {
        self.counts.as_ref()
    }

    pub fn events_per_setting(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.events_per_setting)
    }

    pub fn outcomes_per_setting(&self) -> usize {
        self.outcomes_per_setting
    }

    pub fn num_settings(&self) -> usize {
        self.frequencies.len() / self.outcomes_per_setting
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub(crate) fn check_scheme(&self, scheme: &TomographyScheme) -> Result<()> {
        if self.len() != scheme.num_outcomes() || self.outcomes_per_setting != scheme.dim() {
            return Err(invalid(format!(
                "data with {} outcomes does not match the {}-qubit scheme ({} outcomes)",
                self.len(),
                scheme.num_qubits(),
                scheme.num_outcomes()
            )));
        }
        Ok(())
    }
}

/// Linear inversion `ρ̂_LIN = Σ_ν A_ν f_ν`. Hermitian with unit trace, not
/// necessarily positive.
pub fn linear_inversion(f: &FrequencyData, scheme: &TomographyScheme) -> Result<HermitianOperator> {
    f.check_scheme(scheme)?;
    scheme.invert(f.frequencies())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::computational_basis_state;
    use crate::testutil::{random_hermitian, random_state};

    #[test]
    fn single_qubit_scheme_layout() {
        let sc = TomographyScheme::new(1).unwrap();
        assert_eq!(sc.num_outcomes(), 6);
        let labels: Vec<_> = sc.settings().iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["X", "Y", "Z"]);
        let m = sc.projector(sc.outcome_index(2, 0));
        let ket0 = computational_basis_state(1, 0);
        assert!(m.max_abs_diff(ket0.operator()) < 1e-15);
    }

    #[test]
    fn single_qubit_b_matrix() {
        let b = TomographyScheme::new(1).unwrap().b_matrix();
        // Columns I, X, Y, Z; rows (X,+),(X,−),(Y,+),(Y,−),(Z,+),(Z,−).
        let expected = [
            [0.5, 0.5, 0.0, 0.0],
            [0.5, -0.5, 0.0, 0.0],
            [0.5, 0.0, 0.5, 0.0],
            [0.5, 0.0, -0.5, 0.0],
            [0.5, 0.0, 0.0, 0.5],
            [0.5, 0.0, 0.0, -0.5],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_eq!(b[(i, j)], e, "({i},{j})");
            }
        }
    }

    #[test]
    fn b_matrix_matches_direct_traces() {
        let sc = TomographyScheme::new(2).unwrap();
        let b = sc.b_matrix();
        for nu in [0, 5, 17, 35] {
            let m = sc.projector(nu);
            for mu in 0..16 {
                let direct = m.inner(&sc.pauli(mu)) / 4.0;
                assert!((b[(nu, mu)] - direct).abs() < 1e-14);
            }
        }
        // identity column is constant 1/2ⁿ
        assert!((0..36).all(|nu| b[(nu, 0)] == 0.25));
    }

    #[test]
    fn projectors_are_rank_one_and_resolve_identity() {
        let sc = TomographyScheme::new(2).unwrap();
        assert_eq!(sc.num_outcomes(), 36);
        let proj = sc.projectors();
        for m in &proj {
            assert!((m.trace() - 1.0).abs() < 1e-14);
            let sq = HermitianOperator::hermitize(m.product(m));
            assert!(sq.max_abs_diff(m) < 1e-14);
        }
        for s in 0..9 {
            let mut acc = HermitianOperator::zeros(4);
            for r in 0..4 {
                acc = &acc + &proj[s * 4 + r];
            }
            assert!(acc.max_abs_diff(&HermitianOperator::identity(4)) < 1e-14);
        }
    }

    #[test]
    fn rank_of_two_qubit_b() {
        let b = TomographyScheme::new(2).unwrap().b_matrix();
        let svd = b.svd(false, false);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * smax).count();
        assert_eq!(rank, 16);
    }

    #[test]
    fn pseudo_inverse_matches_svd() {
        let sc = TomographyScheme::new(2).unwrap();
        let b = sc.b_matrix();
        let pinv = b.clone().pseudo_inverse(1e-12).unwrap();
        let ours = sc.b_pseudo_inverse();
        assert!((pinv - &ours).abs().max() < 1e-12);
        let eye = &ours * &b;
        assert!((eye - DMatrix::<f64>::identity(16, 16)).abs().max() < 1e-12);
    }

    #[test]
    fn single_qubit_dual_operator() {
        let sc = TomographyScheme::new(1).unwrap();
        let a = sc.dual_operator(sc.outcome_index(2, 0));
        let expected = &(HermitianOperator::identity(2) * (1.0 / 6.0))
            + &(crate::pauli::pauli_string("Z").unwrap() * 0.5);
        assert!(a.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn dual_frame_sums_to_identity() {
        // Uniform data f ≡ 2⁻ⁿ must invert to 𝟙/2ⁿ, hence Σ_ν A_ν = 𝟙.
        for n in 1..=3 {
            let sc = TomographyScheme::new(n).unwrap();
            let d = sc.dim();
            let mut acc = HermitianOperator::zeros(d);
            for a in sc.dual_frame() {
                acc = &acc + &a;
            }
            assert!(acc.max_abs_diff(&HermitianOperator::identity(d)) < 1e-12);
            let inv = sc.invert(&vec![1.0 / d as f64; sc.num_outcomes()]).unwrap();
            assert!(inv.max_abs_diff(&HermitianOperator::maximally_mixed(d)) < 1e-12);
        }
    }

    #[test]
    fn frame_and_dual_identities() {
        for n in 1..=3 {
            let sc = TomographyScheme::new(n).unwrap();
            let proj = sc.projectors();
            let dual = sc.dual_frame();
            for seed in 0..3 {
                let x = random_hermitian(n, 100 + seed);
                let mut frame = HermitianOperator::zeros(sc.dim());
                let mut dual_sum = HermitianOperator::zeros(sc.dim());
                for (m, a) in proj.iter().zip(&dual) {
                    frame = &frame + &(a * m.inner(&x));
                    dual_sum = &dual_sum + &(m * a.inner(&x));
                }
                assert!(frame.max_abs_diff(&x) < 1e-9);
                assert!(dual_sum.max_abs_diff(&x) < 1e-9);
            }
        }
    }

    #[test]
    fn born_probabilities_examples() {
        let sc = TomographyScheme::new(1).unwrap();
        let p = sc.born_probabilities(&computational_basis_state(1, 0)).unwrap();
        assert_eq!(&p[4..6], &[1.0, 0.0]);
        let sc3 = TomographyScheme::new(3).unwrap();
        let p = sc3.born_probabilities(&QuantumState::maximally_mixed(8)).unwrap();
        assert!(p.iter().all(|x| (x - 0.125).abs() < 1e-15));
    }

    #[test]
    fn noisy_ghz_zzzz_probabilities() {
        let sc = TomographyScheme::new(4).unwrap();
        let rho = crate::states::make_state(&"ghz:4@F=0.8".parse().unwrap()).unwrap();
        let p = sc.born_probabilities(&rho).unwrap();
        let zzzz = sc.setting_index("ZZZZ").unwrap();
        let block = &p[zzzz * 16..zzzz * 16 + 16];
        let pw: f64 = (0.8 - 1.0 / 16.0) / (15.0 / 16.0);
        let peak = pw / 2.0 + (1.0 - pw) / 16.0;
        let floor = (1.0 - pw) / 16.0;
        assert!((peak - 0.406_666_666_666_666_7).abs() < 1e-12);
        assert!((floor - 0.013_333_333_333_333_3).abs() < 1e-12);
        for (r, &x) in block.iter().enumerate() {
            let e = if r == 0 || r == 15 { peak } else { floor };
            assert!((x - e).abs() < 1e-12, "r={r}: {x}");
        }
        for s in 0..81 {
            let tot: f64 = p[s * 16..(s + 1) * 16].iter().sum();
            assert!((tot - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn born_rejects_dimension_mismatch() {
        let sc = TomographyScheme::new(2).unwrap();
        assert!(sc.born_probabilities(&QuantumState::maximally_mixed(8)).is_err());
    }

    #[test]
    fn linear_inversion_examples() {
        let sc = TomographyScheme::new(1).unwrap();
        let f = FrequencyData::from_frequencies(2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let rho = linear_inversion(&f, &sc).unwrap();
        let t = crate::pauli::pauli_expectations(&rho);
        assert!((t[1] - 1.0).abs() < 1e-14 && (t[2] - 1.0).abs() < 1e-14 && (t[3] - 1.0).abs() < 1e-14);
        let lmin = rho.min_eigenvalue();
        assert!((lmin - (1.0 - 3f64.sqrt()) / 2.0).abs() < 1e-14);

        let sc2 = TomographyScheme::new(2).unwrap();
        let rho0 = random_state(2, 5);
        let p = sc2.born_probabilities(&rho0).unwrap();
        let back = linear_inversion(&FrequencyData::from_frequencies(4, p).unwrap(), &sc2).unwrap();
        assert!(back.max_abs_diff(rho0.operator()) < 1e-12);
    }

    #[test]
    fn linear_inversion_arity_mismatch() {
        let sc = TomographyScheme::new(2).unwrap();
        let f = FrequencyData::from_frequencies(2, vec![0.5; 6]).unwrap();
        assert!(linear_inversion(&f, &sc).is_err());
    }

    #[test]
    fn counts_validation() {
        assert!(FrequencyData::from_counts(2, 10, vec![4, 6, 10, 0]).is_ok());
        let err = FrequencyData::from_counts(2, 10, vec![4, 6, 9, 0]).unwrap_err();
        assert!(err.to_string().contains("setting 1"));
        assert!(FrequencyData::from_counts(2, 0, vec![0, 0]).is_err());
    }

    #[test]
    fn scheme_guard() {
        assert!(TomographyScheme::new(0).is_err());
        assert!(TomographyScheme::new(7).is_err());
        assert!(TomographyScheme::with_limit(2, 1).is_err());
    }

    #[test]
    fn frame_coefficients_reconstruct() {
        let sc = TomographyScheme::new(2).unwrap();
        let l = random_hermitian(2, 9);
        let coeffs = sc.frame_coefficients(&l).unwrap();
        let back = sc.weighted_projector_sum(&coeffs).unwrap();
        assert!(back.max_abs_diff(&l) < 1e-12);
        let direct: Vec<f64> = (0..36).map(|nu| sc.dual_operator(nu).inner(&l)).collect();
        for (a, b) in coeffs.iter().zip(direct) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn outcome_vectors_match_projectors() {
        for n in 1..=3 {
            let sc = TomographyScheme::new(n).unwrap();
            for nu in 0..sc.num_outcomes() {
                let from_vec = HermitianOperator::projector(&sc.outcome_vector(nu));
                assert!(from_vec.max_abs_diff(&sc.projector(nu)) < 1e-14, "n={n} nu={nu}");
            }
        }
    }
}
