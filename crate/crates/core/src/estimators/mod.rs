//! State estimators: linear inversion and the physicality-constrained
//! maximum-likelihood and least-squares fits.

mod newton;
mod optimizer;
mod projection;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operator::{HermitianOperator, QuantumState};
use crate::random::ginibre_state;
use crate::scheme::{linear_inversion, FrequencyData, TomographyScheme};

use optimizer::{maximize, Ascent, LogLikelihood, Objective, WeightedLeastSquares};
pub use projection::{project_to_physical, project_to_simplex};

/// Reconstruction method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "LIN")]
    Lin,
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "LS")]
    Ls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Lin, Method::Ml, Method::Ls];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lin => "LIN",
            Method::Ml => "ML",
            Method::Ls => "LS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LIN" => Ok(Method::Lin),
            "ML" => Ok(Method::Ml),
            "LS" => Ok(Method::Ls),
            other => Err(invalid(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative target change treated as stagnation.
    pub target_tolerance: f64,
    /// Bound on the optimality gap `λ_max(∇T) − tr(ρ∇T)`.
    pub certificate_tolerance: f64,
    /// Floor on probabilities inside logarithms and LS denominators.
    pub probability_floor: f64,
    /// Number of LS starting points (the first is the maximally mixed state).
    pub ls_restarts: usize,
    #[serde(skip)]
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            target_tolerance: 1e-10,
            certificate_tolerance: 1e-6,
            probability_floor: 1e-12,
            ls_restarts: 1,
            record_history: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iterations > 0
            && self.target_tolerance > 0.0
            && self.certificate_tolerance > 0.0
            && self.probability_floor > 0.0
            && self.ls_restarts > 0;
        if positive {
            Ok(())
        } else {
            Err(invalid("solver options must all be positive"))
        }
    }
}

/// Estimated operator, tagged by whether it is guaranteed physical.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimate {
    Physical(QuantumState),
    /// Linear inversion output: Hermitian, unit trace, possibly not positive.
    Unconstrained(HermitianOperator),
}

impl Estimate {
    pub fn operator(&self) -> &HermitianOperator {
        match self {
            Estimate::Physical(s) => s.operator(),
            Estimate::Unconstrained(h) => h,
        }
    }

    pub fn as_state(&self) -> Option<&QuantumState> {
        match self {
            Estimate::Physical(s) => Some(s),
            Estimate::Unconstrained(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub estimate: Estimate,
    pub method: Method,
    pub iterations: usize,
    pub target_value: f64,
    pub certificate_residual: f64,
    pub converged: bool,
    /// Target value after every accepted step, when requested.
    pub history: Vec<f64>,
}

impl ReconstructionResult {
    pub fn operator(&self) -> &HermitianOperator {
        self.estimate.operator()
    }
}

fn from_ascent(method: Method, a: Ascent) -> ReconstructionResult {
    ReconstructionResult {
        estimate: Estimate::Physical(a.state),
        method,
        iterations: a.iterations,
        target_value: a.value,
        certificate_residual: a.gap,
        converged: a.converged,
        history: a.history,
    }
}

fn check_start(init: Option<&QuantumState>, scheme: &TomographyScheme) -> Result<QuantumState> {
    match init {
        Some(s) if s.dim() != scheme.dim() => Err(invalid("initial state dimension mismatch")),
        Some(s) => Ok(s.clone()),
        None => Ok(QuantumState::maximally_mixed(scheme.dim())),
    }
}

/// Maximum-likelihood estimate, maximizing `Σ f log P` over states.
pub fn ml_reconstruct(f: &FrequencyData, scheme: &TomographyScheme, opts: &SolverOptions) -> Result<ReconstructionResult> {
    ml_reconstruct_from(f, scheme, opts, None)
}

/// [`ml_reconstruct`] from a given starting state.
pub fn ml_reconstruct_from(
    f: &FrequencyData,
    scheme: &TomographyScheme,
    opts: &SolverOptions,
    init: Option<&QuantumState>,
) -> Result<ReconstructionResult> {
    f.check_scheme(scheme)?;
    opts.validate()?;
    let start = check_start(init, scheme)?;
    let obj = LogLikelihood {
        freqs: f.frequencies(),
        floor: opts.probability_floor,
    };
    Ok(from_ascent(Method::Ml, maximize(&obj, scheme, &start, opts)))
}

/// Least-squares estimate, maximizing `−Σ (f − P)²/P` over states.
pub fn ls_reconstruct(f: &FrequencyData, scheme: &TomographyScheme, opts: &SolverOptions) -> Result<ReconstructionResult> {
    ls_reconstruct_from(f, scheme, opts, None)
}

/// [`ls_reconstruct`] with the first run started at `init`. Further restarts
/// begin at fixed random perturbations of the maximally mixed state.
pub fn ls_reconstruct_from(
    f: &FrequencyData,
    scheme: &TomographyScheme,
    opts: &SolverOptions,
    init: Option<&QuantumState>,
) -> Result<ReconstructionResult> {
    f.check_scheme(scheme)?;
    opts.validate()?;
    let obj = WeightedLeastSquares {
        freqs: f.frequencies(),
        floor: opts.probability_floor,
    };
    let mut best: Option<Ascent> = None;
    let mut total_iterations = 0;
    for k in 0..opts.ls_restarts {
        let start = if k == 0 {
            check_start(init, scheme)?
        } else {
            perturbed_start(scheme, k)
        };
        let run = maximize(&obj, scheme, &start, opts);
        total_iterations += run.iterations;
        if best.as_ref().map_or(true, |b| run.value > b.value) {
            best = Some(run);
        }
    }
    let mut result = from_ascent(Method::Ls, best.expect("at least one restart"));
    result.iterations = total_iterations;
    Ok(result)
}

/// Evaluates a target function at a given state; exposed for diagnostics.
pub fn target_value(method: Method, f: &FrequencyData, scheme: &TomographyScheme, rho: &HermitianOperator, floor: f64) -> Result<f64> {
    f.check_scheme(scheme)?;
    let probs = scheme.outcome_expectations(rho)?;
    Ok(match method {
        Method::Ml => LogLikelihood { freqs: f.frequencies(), floor }.value(&probs),
        Method::Ls => WeightedLeastSquares { freqs: f.frequencies(), floor }.value(&probs),
        Method::Lin => return Err(invalid("linear inversion has no target function")),
    })
}

fn perturbed_start(scheme: &TomographyScheme, k: usize) -> QuantumState {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + k as u64);
    let random = ginibre_state(scheme.num_qubits(), &mut rng);
    let mixed = HermitianOperator::maximally_mixed(scheme.dim());
    QuantumState::new_unchecked(&(mixed * 0.5) + &(random.operator() * 0.5))
}

/// Dispatches on `method`.
pub fn reconstruct(method: Method, f: &FrequencyData, scheme: &TomographyScheme, opts: &SolverOptions) -> Result<ReconstructionResult> {
    reconstruct_from(method, f, scheme, opts, None)
}

/// Dispatches on `method`, warm-starting ML/LS at `init`.
pub fn reconstruct_from(
    method: Method,
    f: &FrequencyData,
    scheme: &TomographyScheme,
    opts: &SolverOptions,
    init: Option<&QuantumState>,
) -> Result<ReconstructionResult> {
    match method {
        Method::Lin => Ok(ReconstructionResult {
            estimate: Estimate::Unconstrained(linear_inversion(f, scheme)?),
            method,
            iterations: 0,
            target_value: f64::NAN,
            certificate_residual: 0.0,
            converged: true,
            history: Vec::new(),
        }),
        Method::Ml => ml_reconstruct_from(f, scheme, opts, init),
        Method::Ls => ls_reconstruct_from(f, scheme, opts, init),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{toss_frequencies, SeedPolicy};
    use crate::states::make_state;
    use crate::testutil::random_state;

    fn exact(rho: &QuantumState, sc: &TomographyScheme) -> FrequencyData {
        FrequencyData::from_frequencies(sc.dim(), sc.born_probabilities(rho).unwrap()).unwrap()
    }

    #[test]
    fn ml_recovers_state_from_exact_data() {
        let sc = TomographyScheme::new(2).unwrap();
        let rho = random_state(2, 3);
        let res = ml_reconstruct(&exact(&rho, &sc), &sc, &SolverOptions::default()).unwrap();
        assert!(res.converged, "gap {}", res.certificate_residual);
        assert!(res.operator().max_abs_diff(rho.operator()) < 1e-6);
    }

    #[test]
    fn ls_recovers_state_from_exact_data() {
        let sc = TomographyScheme::new(2).unwrap();
        let rho = random_state(2, 8);
        let res = ls_reconstruct(&exact(&rho, &sc), &sc, &SolverOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.operator().max_abs_diff(rho.operator()) < 1e-6);
        assert!(res.target_value.abs() < 1e-10);
    }

    #[test]
    fn ml_from_pure_state_data_is_physical() {
        let sc = TomographyScheme::new(2).unwrap();
        let rho = make_state(&"ghz:2@F=1".parse().unwrap()).unwrap();
        let probs = sc.born_probabilities(&rho).unwrap();
        let f = toss_frequencies(&probs, 4, 50, &mut SeedPolicy::new(1, 0, "t").rng()).unwrap();
        assert!(f.frequencies().iter().any(|&x| x == 0.0));
        let res = ml_reconstruct(&f, &sc, &SolverOptions::default()).unwrap();
        assert!(res.converged);
        let vals = res.operator().eigh().values;
        assert!(vals[0] >= -1e-9);
        assert!(vals[0] < 1e-4, "expected a rank-deficient estimate, got {vals:?}");
    }

    #[test]
    fn ascent_is_monotone() {
        let sc = TomographyScheme::new(2).unwrap();
        let rho = make_state(&"ghz:2@F=0.9".parse().unwrap()).unwrap();
        let probs = sc.born_probabilities(&rho).unwrap();
        let f = toss_frequencies(&probs, 4, 100, &mut SeedPolicy::new(2, 0, "t").rng()).unwrap();
        let opts = SolverOptions {
            record_history: true,
            ..Default::default()
        };
        for method in [Method::Ml, Method::Ls] {
            let res = reconstruct(method, &f, &sc, &opts).unwrap();
            assert!(res.history.len() > 2);
            assert!(res.history.windows(2).all(|w| w[1] >= w[0]), "{method}");
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("ml".parse::<Method>().unwrap(), Method::Ml);
        assert_eq!("LIN".parse::<Method>().unwrap(), Method::Lin);
        assert!("MAP".parse::<Method>().is_err());
    }

    #[test]
    fn invalid_options_rejected() {
        let sc = TomographyScheme::new(1).unwrap();
        let f = exact(&QuantumState::maximally_mixed(2), &sc);
        let opts = SolverOptions {
            ls_restarts: 0,
            ..Default::default()
        };
        assert!(ls_reconstruct(&f, &sc, &opts).is_err());
    }
}
