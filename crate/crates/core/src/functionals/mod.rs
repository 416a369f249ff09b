//! State functionals, linear witnesses and Hoeffding bounds.

mod scalar;
mod witness;

use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::operator::{HermitianOperator, QuantumState};
use crate::states::{StateFamily, StateSpec};

pub use scalar::{
    entropy, entropy_gradient, fidelity_mixed, fidelity_mixed_checked, fidelity_pure, jz_operator, negativity, purity,
    purity_gradient, qfi, qfi_gradient, qfi_gradient_operator, SPECTRAL_ZERO,
};
pub use witness::{
    frame_coefficients, h_squared, hoeffding_bound, hoeffding_penalty, linearize, negativity_witness, regularize_anchor,
    witness_for, BoundDirection, WitnessOperator, ANCHOR_REGULARIZATION, NEGATIVE_EIGEN_TOL, RECONSTRUCTION_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curvature {
    Convex,
    Concave,
    Linear,
}

#[derive(Clone, Debug)]
pub enum FunctionalKind {
    FidelityPure { target: Vec<Complex64> },
    FidelityMixed { target: QuantumState },
    Purity,
    Entropy,
    Negativity { party_a: Vec<usize> },
    Qfi { generator: HermitianOperator },
}

/// A named functional `g(ρ)`.
#[derive(Clone, Debug)]
pub struct FunctionalSpec {
    label: String,
    kind: FunctionalKind,
}

impl FunctionalSpec {
    pub fn new(label: impl Into<String>, kind: FunctionalKind) -> Self {
        Self {
            label: label.into(),
            kind,
        }
    }

    /// Parses `fid`, `fid:<family>`, `purity`, `entropy`, `neg:01|23` and
    /// `qfi:jz` for states on the qubits of `state`.
    pub fn parse(text: &str, state: &StateSpec) -> Result<Self> {
        let n = state.n_qubits;
        let text = text.trim();
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let kind = match (head.to_ascii_lowercase().as_str(), arg) {
            ("fid", None) | ("fid", Some("target")) => fidelity_kind(state),
            ("fid", Some(fam)) => {
                let family = StateFamily::parse(fam)?;
                if family == state.family {
                    fidelity_kind(state)
                } else {
                    let other = StateSpec::new(family, n, 1.0)?;
                    fidelity_kind(&other)
                }
            }
            ("purity", None) => FunctionalKind::Purity,
            ("entropy", None) => FunctionalKind::Entropy,
            ("neg", Some(parts)) => FunctionalKind::Negativity {
                party_a: parse_bipartition(parts, n)?,
            },
            ("qfi", Some(g)) if g.eq_ignore_ascii_case("jz") => FunctionalKind::Qfi {
                generator: jz_operator(n),
            },
            _ => return Err(invalid(format!("unknown functional {text:?}"))),
        };
        let label = match (&kind, arg) {
            (FunctionalKind::FidelityPure { .. } | FunctionalKind::FidelityMixed { .. }, None) => {
                format!("fid:{}", state.family.short_name())
            }
            (_, Some(a)) => format!("{}:{}", head.to_ascii_lowercase(), a.to_ascii_lowercase()),
            (_, None) => head.to_ascii_lowercase(),
        };
        Ok(Self { label, kind })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &FunctionalKind {
        &self.kind
    }

    pub fn curvature(&self) -> Curvature {
        match self.kind {
            FunctionalKind::FidelityPure { .. } | FunctionalKind::FidelityMixed { .. } => Curvature::Linear,
            FunctionalKind::Purity | FunctionalKind::Negativity { .. } | FunctionalKind::Qfi { .. } => Curvature::Convex,
            FunctionalKind::Entropy => Curvature::Concave,
        }
    }

    /// Whether `evaluate` is defined for operators that are not states.
    pub fn accepts_unphysical(&self) -> bool {
        matches!(
            self.kind,
            FunctionalKind::FidelityPure { .. } | FunctionalKind::Purity | FunctionalKind::Negativity { .. }
        )
    }

    pub fn evaluate(&self, rho: &HermitianOperator) -> Result<f64> {
        match &self.kind {
            FunctionalKind::FidelityPure { target } => fidelity_pure(rho, target),
            FunctionalKind::FidelityMixed { target } => fidelity_mixed_checked(rho, target.operator()),
            FunctionalKind::Purity => Ok(purity(rho)),
            FunctionalKind::Entropy => entropy(rho),
            FunctionalKind::Negativity { party_a } => negativity(rho, party_a),
            FunctionalKind::Qfi { generator } => qfi(rho, generator),
        }
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn fidelity_kind(state: &StateSpec) -> FunctionalKind {
    match state.target_vector() {
        Some(target) => FunctionalKind::FidelityPure { target },
        None => FunctionalKind::FidelityMixed {
            target: state.target_state(),
        },
    }
}

/// `"01|23"` → `[0, 1]`. Both sides must be nonempty and together cover
/// every qubit exactly once.
fn parse_bipartition(text: &str, n: usize) -> Result<Vec<usize>> {
    let bad = |why: &str| invalid(format!("bipartition {text:?}: {why}"));
    let (a, b) = text.split_once('|').ok_or_else(|| bad("expected A|B"))?;
    let digits = |s: &str| -> Result<Vec<usize>> {
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| bad("qubits are single digits")))
            .collect()
    };
    let (a, b) = (digits(a)?, digits(b)?);
    if a.is_empty() || b.is_empty() {
        return Err(bad("both parties need a qubit"));
    }
    let mut seen = vec![false; n];
    for &q in a.iter().chain(&b) {
        if q >= n {
            return Err(bad(&format!("qubit {q} out of range for {n} qubits")));
        }
        if std::mem::replace(&mut seen[q], true) {
            return Err(bad(&format!("qubit {q} listed twice")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(bad("every qubit must belong to a party"));
    }
    Ok(a)
}
