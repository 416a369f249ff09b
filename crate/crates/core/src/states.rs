//! Benchmark states mixed with white noise.
//!
//! Pure families are `p|ψ⟩⟨ψ| + (1−p)𝟙/2ⁿ` with `p` fixed by the requested
//! fidelity `⟨ψ|ρ|ψ⟩`. The Smolin state is the four-qubit bound-entangled
//! mixture `¼ Σ_i |B_i⟩⟨B_i| ⊗ |B_i⟩⟨B_i|` over the Bell basis, with the Bell
//! pairs on qubits (0,1) and (2,3). Its noise weight is solved against the
//! squared Uhlmann fidelity `(tr√(√ρ σ √ρ))²`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::fidelity_mixed;
use crate::operator::{kron_vectors, HermitianOperator, QuantumState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    Ghz,
    W,
    /// `∝ (|0⟩ + |+⟩)^{⊗n}`, fully separable.
    ProductSep,
    Smolin,
}

impl StateFamily {
    pub fn short_name(self) -> &'static str {
        match self {
            StateFamily::Ghz => "ghz",
            StateFamily::W => "w",
            StateFamily::ProductSep => "sep",
            StateFamily::Smolin => "smolin",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ghz" => Ok(StateFamily::Ghz),
            "w" => Ok(StateFamily::W),
            "sep" | "product_sep" => Ok(StateFamily::ProductSep),
            "smolin" => Ok(StateFamily::Smolin),
            other => Err(invalid(format!("unknown state family {other:?}"))),
        }
    }

    pub fn is_pure_target(self) -> bool {
        self != StateFamily::Smolin
    }

    fn check_qubits(self, n: usize) -> Result<()> {
        let ok = match self {
            StateFamily::Ghz | StateFamily::ProductSep => n >= 1,
            StateFamily::W => n >= 3,
            StateFamily::Smolin => n == 4,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "{} state is not defined on {n} qubits",
                self.short_name()
            )))
        }
    }
}

/// A noisy benchmark state: family, qubit count and target fidelity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub family: StateFamily,
    pub n_qubits: usize,
    pub target_fidelity: f64,
}

impl StateSpec {
    pub fn new(family: StateFamily, n_qubits: usize, target_fidelity: f64) -> Result<Self> {
        family.check_qubits(n_qubits)?;
        let spec = Self {
            family,
            n_qubits,
            target_fidelity,
        };
        let (lo, hi) = spec.fidelity_range();
        if !(target_fidelity > lo && target_fidelity <= hi) {
            return Err(invalid(format!(
                "target fidelity {target_fidelity} outside ({lo}, {hi}] for {}",
                family.short_name()
            )));
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Open-closed range of attainable fidelities as `p` runs over `[0, 1]`.
    fn fidelity_range(&self) -> (f64, f64) {
        match self.family {
            // The white-noise floor overlaps the rank-4 Smolin support with weight ¼.
            StateFamily::Smolin => (0.25, 1.0),
            _ => (1.0 / self.dim() as f64, 1.0),
        }
    }

    /// Weight `p` of the noiseless state in the mixture.
    pub fn noise_weight(&self) -> f64 {
        match self.family {
            StateFamily::Smolin => solve_smolin_weight(self.target_fidelity),
            _ => {
                let floor = 1.0 / self.dim() as f64;
                (self.target_fidelity - floor) / (1.0 - floor)
            }
        }
    }

    /// Target vector for the pure families.
    pub fn target_vector(&self) -> Option<Vec<Complex64>> {
        match self.family {
            StateFamily::Ghz => Some(ghz_vector(self.n_qubits)),
            StateFamily::W => Some(w_vector(self.n_qubits)),
            StateFamily::ProductSep => Some(product_sep_vector(self.n_qubits)),
            StateFamily::Smolin => None,
        }
    }

    /// Noiseless reference state.
    pub fn target_state(&self) -> QuantumState {
        match self.target_vector() {
            Some(psi) => QuantumState::new_unchecked(HermitianOperator::projector(&psi)),
            None => smolin_state(),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            StateFamily::Smolin => write!(f, "smolin@F={}", self.target_fidelity),
            fam => write!(
                f,
                "{}:{}@F={}",
                fam.short_name(),
                self.n_qubits,
                self.target_fidelity
            ),
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    /// Parses `"ghz:4@F=0.8"`, `"w:4@F=0.8"`, `"sep:4@F=0.8"`, `"smolin@F=0.8"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("cannot parse state spec {s:?}; expected e.g. \"ghz:4@F=0.8\""));
        let (head, fid) = s.trim().split_once('@').ok_or_else(bad)?;
        let fid = fid
            .strip_prefix("F=")
            .or_else(|| fid.strip_prefix("f="))
            .ok_or_else(bad)?;
        let fidelity: f64 = fid.parse().map_err(|_| bad())?;
        let (family, n) = match head.split_once(':') {
            Some((fam, n)) => (StateFamily::parse(fam)?, n.parse().map_err(|_| bad())?),
            None => {
                let fam = StateFamily::parse(head)?;
                if fam != StateFamily::Smolin {
                    return Err(bad());
                }
                (fam, 4)
            }
        };
        StateSpec::new(family, n, fidelity)
    }
}

/// `p·target + (1−p)𝟙/2ⁿ` for the given spec.
pub fn make_state(spec: &StateSpec) -> Result<QuantumState> {
    let spec = StateSpec::new(spec.family, spec.n_qubits, spec.target_fidelity)?;
    let p = spec.noise_weight();
    Ok(mix_with_white_noise(&spec.target_state(), p))
}

pub fn mix_with_white_noise(target: &QuantumState, p: f64) -> QuantumState {
    let d = target.dim();
    let mixed = HermitianOperator::maximally_mixed(d);
    QuantumState::new_unchecked(&(target.operator() * p) + &(mixed * (1.0 - p)))
}

fn basis_vector(d: usize, idx: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    v[idx] = Complex64::new(1.0, 0.0);
    v
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_vector(n: usize) -> Vec<Complex64> {
    let d = 1usize << n;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    v[0] = Complex64::new(s, 0.0);
    v[d - 1] += Complex64::new(s, 0.0);
    v
}

/// `Σ_i |0…1_i…0⟩/√n`.
pub fn w_vector(n: usize) -> Vec<Complex64> {
    let d = 1usize << n;
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    for q in 0..n {
        v[1 << q] = amp;
    }
    v
}

/// Normalized `(|0⟩ + |+⟩)^{⊗n}` with `|+⟩ = (|0⟩+|1⟩)/√2`.
pub fn product_sep_vector(n: usize) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let norm = (2.0 + std::f64::consts::SQRT_2).sqrt();
    let single = vec![
        Complex64::new((1.0 + s) / norm, 0.0),
        Complex64::new(s / norm, 0.0),
    ];
    kron_vectors(&vec![single; n])
}

/// The four Bell vectors `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻` on two qubits.
pub fn bell_vectors() -> [Vec<Complex64>; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: f64, b: f64, c: f64, d: f64| {
        vec![
            Complex64::new(a * s, 0.0),
            Complex64::new(b * s, 0.0),
            Complex64::new(c * s, 0.0),
            Complex64::new(d * s, 0.0),
        ]
    };
    [
        v(1.0, 0.0, 0.0, 1.0),
        v(1.0, 0.0, 0.0, -1.0),
        v(0.0, 1.0, 1.0, 0.0),
        v(0.0, 1.0, -1.0, 0.0),
    ]
}

/// `¼ Σ_i |B_i⟩⟨B_i| ⊗ |B_i⟩⟨B_i|`.
pub fn smolin_state() -> QuantumState {
    let mut acc = HermitianOperator::zeros(16);
    for b in bell_vectors() {
        let bb = kron_vectors(&[b.clone(), b]);
        acc = &acc + &(HermitianOperator::projector(&bb) * 0.25);
    }
    QuantumState::new_unchecked(acc)
}

fn solve_smolin_weight(target: f64) -> f64 {
    let smolin = smolin_state();
    let fid = |p: f64| fidelity_mixed(&mix_with_white_noise(&smolin, p), &smolin);
    // Fidelity is increasing in p; bisect on [0, 1].
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fid(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Computational basis state `|idx⟩` on `n` qubits.
pub fn computational_basis_state(n: usize, idx: usize) -> QuantumState {
    QuantumState::new_unchecked(HermitianOperator::projector(&basis_vector(1 << n, idx)))
}
