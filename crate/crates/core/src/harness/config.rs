use serde::Serialize;

use crate::error::{invalid, Result};
use crate::estimators::{Method, SolverOptions};
use crate::functionals::FunctionalSpec;
use crate::states::StateSpec;

pub const DEFAULT_TRIALS: usize = 500;
pub const DEFAULT_RESAMPLES: usize = 100;
pub const DEFAULT_GAMMAS: [f64; 2] = [0.68, 0.99];
pub const DEFAULT_NS_GRID: [u64; 5] = [25, 50, 100, 200, 500];
pub const DEFAULT_QUBIT_GRID: [usize; 5] = [2, 3, 4, 5, 6];
pub const DEFAULT_FIDELITY_GRID: [f64; 6] = [0.2, 0.4, 0.6, 0.8, 0.9, 0.95];
/// Largest acceptable fraction of trials with an unconverged reconstruction.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapKind {
    /// Resample from the Born probabilities of the seed estimate.
    Parametric,
    /// Resample from the observed frequencies.
    Nonparametric,
}

/// What an experiment does. Sweeps carry their grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Bias,
    SweepNs(Vec<u64>),
    SweepN(Vec<usize>),
    SweepFidelity(Vec<f64>),
    Bootstrap { kind: BootstrapKind, resamples: usize },
    Witness,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Bias => "bias",
            Mode::SweepNs(_) => "sweep_ns",
            Mode::SweepN(_) => "sweep_n",
            Mode::SweepFidelity(_) => "sweep_fidelity",
            Mode::Bootstrap { .. } => "bootstrap",
            Mode::Witness => "witness",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub state: StateSpec,
    pub events_per_setting: u64,
    pub trials: usize,
    pub estimators: Vec<Method>,
    pub functionals: Vec<String>,
    pub gammas: Vec<f64>,
    pub seed: u64,
    pub solver: SolverOptions,
    /// Scheme size guard.
    pub max_qubits: usize,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, state: StateSpec) -> Self {
        Self {
            mode,
            state,
            events_per_setting: 100,
            trials: DEFAULT_TRIALS,
            estimators: Method::ALL.to_vec(),
            functionals: vec!["fid".into()],
            gammas: DEFAULT_GAMMAS.to_vec(),
            seed: 0,
            solver: SolverOptions::default(),
            max_qubits: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(invalid("at least two trials are required"));
        }
        if self.events_per_setting == 0 {
            return Err(invalid("events per setting must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("no estimators requested"));
        }
        if self.functionals.is_empty() {
            return Err(invalid("no functionals requested"));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(0.0..1.0).contains(*g)) {
            return Err(invalid(format!("confidence level {g} outside [0, 1)")));
        }
        self.solver.validate()?;
        match &self.mode {
            Mode::SweepNs(grid) => increasing(grid, "N_s")?,
            Mode::SweepN(grid) => increasing(grid, "qubit")?,
            Mode::SweepFidelity(grid) => increasing(grid, "fidelity")?,
            Mode::Bootstrap { resamples, .. } if *resamples < 2 => {
                return Err(invalid("bootstrap needs at least two resamples"))
            }
            _ => {}
        }
        if let Mode::SweepNs(grid) = &self.mode {
            if grid.contains(&0) {
                return Err(invalid("events per setting must be at least 1"));
            }
        }
        for point in self.points()? {
            if point.state.n_qubits > self.max_qubits {
                return Err(invalid(format!(
                    "{} qubits exceed the limit of {}",
                    point.state.n_qubits, self.max_qubits
                )));
            }
            for f in &self.functionals {
                FunctionalSpec::parse(f, &point.state)?;
            }
        }
        Ok(())
    }

    /// The (state, N_s) grid the experiment visits.
    pub fn points(&self) -> Result<Vec<Point>> {
        let s = &self.state;
        let at = |state: StateSpec, events: u64| Point { state, events };
        Ok(match &self.mode {
            Mode::SweepNs(grid) => grid.iter().map(|&ns| at(s.clone(), ns)).collect(),
            Mode::SweepN(grid) => grid
                .iter()
                .map(|&n| StateSpec::new(s.family, n, s.target_fidelity).map(|st| at(st, self.events_per_setting)))
                .collect::<Result<_>>()?,
            Mode::SweepFidelity(grid) => grid
                .iter()
                .map(|&fid| StateSpec::new(s.family, s.n_qubits, fid).map(|st| at(st, self.events_per_setting)))
                .collect::<Result<_>>()?,
            _ => vec![at(s.clone(), self.events_per_setting)],
        })
    }
}

/// One grid point of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub state: StateSpec,
    pub events: u64,
}

fn increasing<T: PartialOrd + std::fmt::Debug>(grid: &[T], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(format!("empty {what} sweep")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(format!("{what} sweep {grid:?} is not strictly increasing")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let state: StateSpec = "ghz:4@F=0.8".parse().unwrap();
        let mut c = ExperimentConfig::new(Mode::Bias, state.clone());
        assert!(c.validate().is_ok());
        c.trials = 1;
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(Mode::SweepNs(vec![50, 25]), state.clone());
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(Mode::SweepN(vec![2, 3, 9]), state.clone());
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Mode::Bias, state);
        c.functionals = vec!["neg:0|1".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn sweep_points() {
        let state: StateSpec = "ghz:4@F=0.8".parse().unwrap();
        let c = ExperimentConfig::new(Mode::SweepN(vec![2, 3]), state);
        let p = c.points().unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].state.to_string(), "ghz:3@F=0.8");
        assert_eq!(p[0].events, 100);
    }
}
