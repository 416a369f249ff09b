use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::estimators::{reconstruct, reconstruct_from, Estimate, Method, ReconstructionResult, SolverOptions};
use crate::functionals::{witness_for, FunctionalSpec, WitnessOperator};
use crate::operator::QuantumState;
use crate::sampling::{toss_frequencies, SeedPolicy};
use crate::scheme::{FrequencyData, TomographyScheme};
use crate::states::{make_state, StateSpec};

use super::config::{BootstrapKind, ExperimentConfig, Mode, Point, MAX_FAILURE_FRACTION};
use super::stats::AggregateStats;

/// Suffixes appended to functional labels for derived quantities.
pub const WITNESS_SUFFIX: &str = "/witness";
pub const BOOT_MEAN_SUFFIX: &str = "/boot-mean";
pub const BOOT_STD_SUFFIX: &str = "/boot-std";

pub fn bound_label(functional: &str, gamma: f64) -> String {
    format!("{functional}/bound@{gamma}")
}

/// One estimate of one functional in one trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub mode: &'static str,
    pub state: String,
    pub n: usize,
    #[serde(rename = "N_s")]
    pub events: u64,
    pub trial: usize,
    pub estimator: Method,
    pub functional: String,
    pub value: f64,
    pub converged: bool,
    pub cert_residual: f64,
}

/// Statistics of one (grid point, estimator, functional) column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub state: String,
    pub n: usize,
    #[serde(rename = "N_s")]
    pub events: u64,
    pub estimator: Method,
    pub functional: String,
    #[serde(flatten)]
    pub stats: AggregateStats,
    pub unconverged: usize,
    /// Mean of the per-trial bootstrap standard deviations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_error_bar: Option<f64>,
}

/// `|bias|` along a sweep, with the combined standard error of each step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trend {
    pub estimator: Method,
    pub functional: String,
    pub grid: Vec<String>,
    pub abs_bias: Vec<f64>,
    pub step_sem: Vec<f64>,
}

impl Trend {
    /// Every step raises `|bias|` by more than `k` combined standard errors.
    pub fn increasing_beyond(&self, k: f64) -> bool {
        self.abs_bias
            .windows(2)
            .zip(&self.step_sem)
            .all(|(w, s)| w[1] - w[0] > k * s)
    }

    /// No step raises `|bias|` by more than `k` combined standard errors.
    pub fn non_increasing_within(&self, k: f64) -> bool {
        self.abs_bias
            .windows(2)
            .zip(&self.step_sem)
            .all(|(w, s)| w[1] - w[0] <= k * s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trends: Vec<Trend>,
    pub trials_total: usize,
    pub trials_failed: usize,
    /// Witness trials whose anchor showed nothing to witness.
    pub trivial_witnesses: usize,
    /// Estimator and functional pairs left out, with the reason.
    pub skipped: Vec<String>,
}

impl ExperimentOutcome {
    pub fn failure_fraction(&self) -> f64 {
        self.trials_failed as f64 / self.trials_total.max(1) as f64
    }

    /// [`Error::TooManyFailures`] when more than 5% of trials failed.
    pub fn check_failures(&self) -> Result<()> {
        if self.failure_fraction() > MAX_FAILURE_FRACTION {
            Err(Error::TooManyFailures {
                failed: self.trials_failed,
                total: self.trials_total,
            })
        } else {
            Ok(())
        }
    }

    /// Values of one column in trial order.
    pub fn values(&self, estimator: Method, functional: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.estimator == estimator && r.functional == functional)
            .map(|r| r.value)
            .collect()
    }

    pub fn aggregate(&self, estimator: Method, functional: &str) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.estimator == estimator && a.functional == functional)
    }
}

/// Everything a trial needs about its grid point.
struct PointContext {
    state: StateSpec,
    events: u64,
    scheme: TomographyScheme,
    probabilities: Vec<f64>,
    functionals: Vec<FunctionalSpec>,
    truths: Vec<f64>,
    label: String,
}

impl PointContext {
    fn new(config: &ExperimentConfig, point: &Point) -> Result<Self> {
        let scheme = TomographyScheme::with_limit(point.state.n_qubits, config.max_qubits)?;
        let rho = make_state(&point.state)?;
        let probabilities = scheme.born_probabilities(&rho)?;
        let functionals = config
            .functionals
            .iter()
            .map(|f| FunctionalSpec::parse(f, &point.state))
            .collect::<Result<Vec<_>>>()?;
        let truths = functionals
            .iter()
            .map(|f| f.evaluate(rho.operator()))
            .collect::<Result<Vec<_>>>()?;
        let label = match &config.mode {
            Mode::SweepNs(_) => format!("tomo/ns={}", point.events),
            Mode::SweepN(_) => format!("tomo/n={}", point.state.n_qubits),
            Mode::SweepFidelity(_) => format!("tomo/F={}", point.state.target_fidelity),
            _ => "tomo".to_string(),
        };
        Ok(Self {
            state: point.state.clone(),
            events: point.events,
            scheme,
            probabilities,
            functionals,
            truths,
            label,
        })
    }

    fn toss(&self, seed: u64, trial: usize, label: &str) -> Result<FrequencyData> {
        let mut rng = SeedPolicy::new(seed, trial as u64, label).rng();
        toss_frequencies(&self.probabilities, self.scheme.dim(), self.events, &mut rng)
    }

    fn record(&self, mode: &'static str, trial: usize, estimator: Method, functional: String, value: f64, fit: &Fit) -> TrialRecord {
        TrialRecord {
            mode,
            state: self.state.to_string(),
            n: self.state.n_qubits,
            events: self.events,
            trial,
            estimator,
            functional,
            value,
            converged: fit.converged,
            cert_residual: fit.cert_residual,
        }
    }

    fn truth_of(&self, column: &str) -> f64 {
        let base = column.split_once('/').map_or(column, |(b, _)| b);
        self.functionals
            .iter()
            .position(|f| f.label() == base)
            .map_or(f64::NAN, |k| self.truths[k])
    }
}

/// Convergence summary attached to records.
#[derive(Clone, Copy)]
struct Fit {
    converged: bool,
    cert_residual: f64,
}

impl From<&ReconstructionResult> for Fit {
    fn from(r: &ReconstructionResult) -> Self {
        Fit {
            converged: r.converged,
            cert_residual: r.certificate_residual,
        }
    }
}

struct TrialOutput {
    records: Vec<TrialRecord>,
    failed: bool,
    trivial: usize,
}

/// Functional value on an estimate, or `None` for state-only functionals on
/// unconstrained estimates.
fn evaluate(spec: &FunctionalSpec, estimate: &Estimate) -> Result<Option<f64>> {
    match estimate {
        Estimate::Unconstrained(_) if !spec.accepts_unphysical() => Ok(None),
        e => spec.evaluate(e.operator()).map(Some),
    }
}

fn skipped_pairs(config: &ExperimentConfig, functionals: &[FunctionalSpec]) -> Vec<String> {
    if !config.estimators.contains(&Method::Lin) || config.mode == Mode::Witness {
        return Vec::new();
    }
    functionals
        .iter()
        .filter(|f| !f.accepts_unphysical())
        .map(|f| format!("LIN × {}: defined on states only", f.label()))
        .collect()
}

/// Runs any experiment mode.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let points = config.points()?;
    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    let mut per_point: Vec<Vec<AggregateRow>> = Vec::new();
    let (mut failed, mut trivial, mut skipped) = (0, 0, Vec::new());
    for point in &points {
        let ctx = PointContext::new(config, point)?;
        if skipped.is_empty() {
            skipped = skipped_pairs(config, &ctx.functionals);
        }
        let outputs: Vec<Result<TrialOutput>> = (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, &ctx, t))
            .collect();
        let start = records.len();
        for out in outputs {
            let out = out?;
            failed += out.failed as usize;
            trivial += out.trivial;
            records.extend(out.records);
        }
        let rows = aggregate(&ctx, &records[start..]);
        aggregates.extend(rows.iter().cloned());
        per_point.push(rows);
    }
    let trends = match &config.mode {
        Mode::SweepNs(_) | Mode::SweepN(_) | Mode::SweepFidelity(_) => trends(&config.mode, &per_point),
        _ => Vec::new(),
    };
    Ok(ExperimentOutcome {
        config: config.clone(),
        records,
        aggregates,
        trends,
        trials_total: config.trials * points.len(),
        trials_failed: failed,
        trivial_witnesses: trivial,
        skipped,
    })
}

fn expect_mode(config: &ExperimentConfig, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("{what} called with mode {}", config.mode.name())))
    }
}

/// Fixed-point bias experiment: toss, reconstruct, evaluate, aggregate.
pub fn run_bias_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    expect_mode(config, config.mode == Mode::Bias, "run_bias_experiment")?;
    run_experiment(config)
}

/// Bias curves over an N_s, qubit or fidelity grid.
pub fn run_sweep(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let ok = matches!(config.mode, Mode::SweepNs(_) | Mode::SweepN(_) | Mode::SweepFidelity(_));
    expect_mode(config, ok, "run_sweep")?;
    run_experiment(config)
}

/// Bootstrap error bars for `T` simulated datasets.
pub fn run_bootstrap(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    expect_mode(config, matches!(config.mode, Mode::Bootstrap { .. }), "run_bootstrap")?;
    run_experiment(config)
}

/// Two-stage protocol: an ML anchor from one tomography fixes the witness,
/// an independent tomography is contracted against it.
pub fn run_witness_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    expect_mode(config, config.mode == Mode::Witness, "run_witness_experiment")?;
    run_experiment(config)
}

fn run_trial(config: &ExperimentConfig, ctx: &PointContext, trial: usize) -> Result<TrialOutput> {
    match &config.mode {
        Mode::Bootstrap { kind, resamples } => bootstrap_trial(config, ctx, trial, *kind, *resamples),
        Mode::Witness => witness_trial(config, ctx, trial),
        _ => bias_trial(config, ctx, trial),
    }
}

fn bias_trial(config: &ExperimentConfig, ctx: &PointContext, trial: usize) -> Result<TrialOutput> {
    let mode = config.mode.name();
    let f = ctx.toss(config.seed, trial, &ctx.label)?;
    let mut records = Vec::new();
    let mut failed = false;
    for &method in &config.estimators {
        let rec = reconstruct(method, &f, &ctx.scheme, &config.solver)?;
        let fit = Fit::from(&rec);
        failed |= !fit.converged;
        for spec in &ctx.functionals {
            if let Some(v) = evaluate(spec, &rec.estimate)? {
                records.push(ctx.record(mode, trial, method, spec.label().to_string(), v, &fit));
            }
        }
    }
    Ok(TrialOutput {
        records,
        failed,
        trivial: 0,
    })
}

/// Per-dataset bootstrap result for one estimator.
#[derive(Clone, Debug)]
pub struct BootstrapSummary {
    /// Functional values on the seed estimate, one per functional.
    pub seed_values: Vec<f64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub converged: bool,
    pub max_cert_residual: f64,
}

/// Resamples `observed` `resamples` times and re-estimates each functional.
/// Resample `b` of dataset `trial` draws from the stream
/// `(seed, trial, "bootstrap/b")`; fits start at the seed estimate.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_dataset(
    observed: &FrequencyData,
    scheme: &TomographyScheme,
    method: Method,
    kind: BootstrapKind,
    resamples: usize,
    functionals: &[FunctionalSpec],
    opts: &SolverOptions,
    seed: u64,
    trial: usize,
) -> Result<BootstrapSummary> {
    let events = observed
        .events_per_setting()
        .ok_or_else(|| invalid("bootstrap needs counted data"))?;
    if resamples < 2 {
        return Err(invalid("bootstrap needs at least two resamples"));
    }
    let fit = reconstruct(method, observed, scheme, opts)?;
    let mut converged = fit.converged;
    let mut max_cert = fit.certificate_residual;
    let seed_values = functionals
        .iter()
        .map(|s| evaluate(s, &fit.estimate).map(|v| v.unwrap_or(f64::NAN)))
        .collect::<Result<Vec<_>>>()?;
    let source = match kind {
        BootstrapKind::Parametric => model_probabilities(&fit, scheme)?,
        BootstrapKind::Nonparametric => observed.frequencies().to_vec(),
    };
    let warm: Option<QuantumState> = fit.estimate.as_state().cloned();
    let mut samples = vec![Vec::with_capacity(resamples); functionals.len()];
    for b in 0..resamples {
        let mut rng = SeedPolicy::new(seed, trial as u64, format!("bootstrap/{b}")).rng();
        let fb = toss_frequencies(&source, scheme.dim(), events, &mut rng)?;
        let rb = reconstruct_from(method, &fb, scheme, opts, warm.as_ref())?;
        converged &= rb.converged;
        max_cert = max_cert.max(rb.certificate_residual);
        for (k, spec) in functionals.iter().enumerate() {
            samples[k].push(evaluate(spec, &rb.estimate)?.unwrap_or(f64::NAN));
        }
    }
    let (means, stds) = samples
        .iter()
        .map(|s| {
            let st = AggregateStats::from_values(s, 0.0).expect("at least two resamples");
            (st.mean, st.sample_std)
        })
        .unzip();
    Ok(BootstrapSummary {
        seed_values,
        means,
        stds,
        converged,
        max_cert_residual: max_cert,
    })
}

/// Born probabilities of a fit, clipped at zero and renormalized per setting
/// so that unconstrained estimates can be sampled from.
fn model_probabilities(fit: &ReconstructionResult, scheme: &TomographyScheme) -> Result<Vec<f64>> {
    let mut p = scheme.outcome_expectations(fit.operator())?;
    for chunk in p.chunks_mut(scheme.dim()) {
        chunk.iter_mut().for_each(|x| *x = x.max(0.0));
        let total: f64 = chunk.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("estimate assigns no probability to a setting"));
        }
        chunk.iter_mut().for_each(|x| *x /= total);
    }
    Ok(p)
}

fn bootstrap_trial(
    config: &ExperimentConfig,
    ctx: &PointContext,
    trial: usize,
    kind: BootstrapKind,
    resamples: usize,
) -> Result<TrialOutput> {
    let mode = config.mode.name();
    let f = ctx.toss(config.seed, trial, &ctx.label)?;
    let mut records = Vec::new();
    let mut failed = false;
    for &method in &config.estimators {
        let b = bootstrap_dataset(
            &f,
            &ctx.scheme,
            method,
            kind,
            resamples,
            &ctx.functionals,
            &config.solver,
            config.seed,
            trial,
        )?;
        failed |= !b.converged;
        let fit = Fit {
            converged: b.converged,
            cert_residual: b.max_cert_residual,
        };
        for (k, spec) in ctx.functionals.iter().enumerate() {
            if method == Method::Lin && !spec.accepts_unphysical() {
                continue;
            }
            let label = spec.label();
            records.push(ctx.record(mode, trial, method, label.to_string(), b.seed_values[k], &fit));
            records.push(ctx.record(mode, trial, method, format!("{label}{BOOT_MEAN_SUFFIX}"), b.means[k], &fit));
            records.push(ctx.record(mode, trial, method, format!("{label}{BOOT_STD_SUFFIX}"), b.stds[k], &fit));
        }
    }
    Ok(TrialOutput {
        records,
        failed,
        trivial: 0,
    })
}

fn witness_trial(config: &ExperimentConfig, ctx: &PointContext, trial: usize) -> Result<TrialOutput> {
    let mode = config.mode.name();
    let anchor_data = ctx.toss(config.seed, trial, "witness/anchor")?;
    let anchor = reconstruct(Method::Ml, &anchor_data, &ctx.scheme, &config.solver)?;
    let anchor_fit = Fit::from(&anchor);
    let mut failed = !anchor_fit.converged;
    let anchor_state = anchor.estimate.as_state().expect("ML estimates are states");
    let witnesses: Vec<WitnessOperator> = ctx
        .functionals
        .iter()
        .map(|s| witness_for(s, anchor_state, &ctx.scheme))
        .collect::<Result<_>>()?;
    let trivial = witnesses.iter().filter(|w| w.is_trivial()).count();

    let probe = ctx.toss(config.seed, trial, "witness/probe")?;
    let mut records = Vec::new();
    for (spec, w) in ctx.functionals.iter().zip(&witnesses) {
        let label = spec.label();
        let value = w.contract(&probe)?;
        records.push(ctx.record(mode, trial, Method::Lin, format!("{label}{WITNESS_SUFFIX}"), value, &anchor_fit));
        for &gamma in &config.gammas {
            let bound = w.confidence_bound(&probe, gamma)?;
            records.push(ctx.record(mode, trial, Method::Lin, bound_label(label, gamma), bound, &anchor_fit));
        }
    }
    for &method in config.estimators.iter().filter(|m| **m != Method::Lin) {
        let rec = reconstruct(method, &probe, &ctx.scheme, &config.solver)?;
        let fit = Fit::from(&rec);
        failed |= !fit.converged;
        for spec in &ctx.functionals {
            if let Some(v) = evaluate(spec, &rec.estimate)? {
                records.push(ctx.record(mode, trial, method, spec.label().to_string(), v, &fit));
            }
        }
    }
    Ok(TrialOutput {
        records,
        failed,
        trivial,
    })
}

/// Folds records (in trial order) into one row per estimator and column.
fn aggregate(ctx: &PointContext, records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Method, &str)> = Vec::new();
    for r in records {
        if r.functional.ends_with(BOOT_STD_SUFFIX) {
            continue;
        }
        if !keys.iter().any(|&(m, f)| m == r.estimator && f == r.functional) {
            keys.push((r.estimator, &r.functional));
        }
    }
    keys.into_iter()
        .filter_map(|(method, column)| {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.estimator == method && r.functional == column)
                .collect();
            let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
            let stats = AggregateStats::from_values(&values, ctx.truth_of(column))?;
            let mean_error_bar = column.strip_suffix(BOOT_MEAN_SUFFIX).map(|base| {
                let std_col = format!("{base}{BOOT_STD_SUFFIX}");
                let stds: Vec<f64> = records
                    .iter()
                    .filter(|r| r.estimator == method && r.functional == std_col)
                    .map(|r| r.value)
                    .collect();
                stds.iter().sum::<f64>() / stds.len().max(1) as f64
            });
            Some(AggregateRow {
                state: ctx.state.to_string(),
                n: ctx.state.n_qubits,
                events: ctx.events,
                estimator: method,
                functional: column.to_string(),
                stats,
                unconverged: rows.iter().filter(|r| !r.converged).count(),
                mean_error_bar,
            })
        })
        .collect()
}

fn trends(mode: &Mode, per_point: &[Vec<AggregateRow>]) -> Vec<Trend> {
    let grid: Vec<String> = match mode {
        Mode::SweepNs(g) => g.iter().map(|v| v.to_string()).collect(),
        Mode::SweepN(g) => g.iter().map(|v| v.to_string()).collect(),
        Mode::SweepFidelity(g) => g.iter().map(|v| v.to_string()).collect(),
        _ => return Vec::new(),
    };
    let Some(first) = per_point.first() else {
        return Vec::new();
    };
    first
        .iter()
        .filter_map(|row| {
            let column: Option<Vec<&AggregateRow>> = per_point
                .iter()
                .map(|rows| {
                    rows.iter()
                        .find(|r| r.estimator == row.estimator && r.functional == row.functional)
                })
                .collect();
            let column = column?;
            Some(Trend {
                estimator: row.estimator,
                functional: row.functional.clone(),
                grid: grid.clone(),
                abs_bias: column.iter().map(|r| r.stats.bias.abs()).collect(),
                step_sem: column
                    .windows(2)
                    .map(|w| w[0].stats.sem.hypot(w[1].stats.sem))
                    .collect(),
            })
        })
        .collect()
}
