use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tomobias::estimators::{Method, SolverOptions};
use tomobias::harness::{
    records_json, reconstruct_from_file, report_json, run_experiment, summary_json, write_records_csv, BootstrapKind,
    ExperimentConfig, ExperimentOutcome, FileRequest, Mode, DEFAULT_FIDELITY_GRID, DEFAULT_NS_GRID,
    DEFAULT_QUBIT_GRID,
};
use tomobias::{Error, StateSpec, TomographyScheme};

/// Bias of physical quantum state tomography estimators.
#[derive(Parser)]
#[command(name = "tomobias", version)]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "TOMOBIAS_JOBS", default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bias experiment, or a sweep over N_s, qubit number or fidelity.
    Simulate(SimulateArgs),
    /// Parametric or nonparametric bootstrap error bars.
    Bootstrap(BootstrapArgs),
    /// Two-stage witness bounds against ML and LS plug-in values.
    Witness(WitnessArgs),
    /// Reconstruct from a counts file.
    Reconstruct(ReconstructArgs),
    /// B matrix and dual frame diagnostics.
    Schemes(SchemesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepAxis {
    Ns,
    N,
    Fidelity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Parametric,
    Nonparametric,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative target change treated as stagnation.
    #[arg(long, default_value_t = SolverOptions::default().target_tolerance)]
    ml_tol: f64,
    /// Optimality gap required for convergence.
    #[arg(long, default_value_t = SolverOptions::default().certificate_tolerance)]
    cert_tol: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iterations)]
    max_iter: usize,
    #[arg(long, default_value_t = SolverOptions::default().ls_restarts)]
    ls_restarts: usize,
    #[arg(long, default_value_t = SolverOptions::default().probability_floor)]
    prob_floor: f64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_iter,
            target_tolerance: self.ml_tol,
            certificate_tolerance: self.cert_tol,
            probability_floor: self.prob_floor,
            ls_restarts: self.ls_restarts,
            record_history: false,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for records and summary.json; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct CommonArgs {
    /// State spec such as ghz:4@F=0.8 or smolin@F=0.8.
    #[arg(long, default_value = "ghz:4@F=0.8")]
    state: String,
    /// Events per setting; several values run an N_s sweep.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    ns: Vec<u64>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "LIN,ML,LS")]
    estimators: Vec<String>,
    /// fid, fid:<family>, purity, entropy, neg:01|23, qfi:jz.
    #[arg(long, value_delimiter = ',', default_value = "fid")]
    functionals: Vec<String>,
    /// Confidence levels for Hoeffding bounds.
    #[arg(long, value_delimiter = ',', default_value = "0.68,0.99")]
    gamma: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep axis using the default grid unless a grid is given.
    #[arg(long, value_enum)]
    sweep: Option<SweepAxis>,
    /// Qubit grid for an n sweep.
    #[arg(long, value_delimiter = ',')]
    qubits: Option<Vec<usize>>,
    /// Fidelity grid for a fidelity sweep.
    #[arg(long, value_delimiter = ',')]
    fidelities: Option<Vec<f64>>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value = "parametric")]
    kind: Kind,
    /// Resampled datasets per observed dataset.
    #[arg(long, default_value_t = 100)]
    resamples: usize,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Counts JSON file.
    #[arg(long)]
    counts: PathBuf,
    /// Independent counts whose ML estimate anchors the LIN witnesses.
    #[arg(long)]
    anchor: Option<PathBuf>,
    /// Reference state for fid; GHZ on the file's qubits by default.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "LIN,ML,LS")]
    estimators: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "fid")]
    functionals: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.68,0.99")]
    gamma: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SchemesArgs {
    /// Qubit number.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Directory for b_matrix.csv and dual_coefficients.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::IllPosedScheme(_) | Error::Load { .. } => 2,
        Error::TooManyFailures { .. } => 3,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate(a) => {
            let mode = simulate_mode(&a)?;
            let config = build_config(&a.common, mode)?;
            experiment(&config, &a.common.output)
        }
        Command::Bootstrap(a) => {
            let kind = match a.kind {
                Kind::Parametric => BootstrapKind::Parametric,
                Kind::Nonparametric => BootstrapKind::Nonparametric,
            };
            let mode = Mode::Bootstrap {
                kind,
                resamples: a.resamples,
            };
            experiment(&build_config(&a.common, mode)?, &a.common.output)
        }
        Command::Witness(a) => experiment(&build_config(&a.common, Mode::Witness)?, &a.common.output),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Schemes(a) => schemes(a),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn simulate_mode(a: &SimulateArgs) -> Result<Mode, Error> {
    let ns_sweep = a.common.ns.len() > 1;
    let chosen = [ns_sweep, a.qubits.is_some(), a.fidelities.is_some()];
    if chosen.iter().filter(|c| **c).count() > 1 {
        return Err(invalid("sweep over one of --ns, --qubits, --fidelities at a time"));
    }
    let axis = match (a.sweep, chosen) {
        (Some(axis), _) => Some(axis),
        (None, [true, _, _]) => Some(SweepAxis::Ns),
        (None, [_, true, _]) => Some(SweepAxis::N),
        (None, [_, _, true]) => Some(SweepAxis::Fidelity),
        (None, _) => None,
    };
    Ok(match axis {
        None => Mode::Bias,
        Some(SweepAxis::Ns) if a.qubits.is_some() || a.fidelities.is_some() => {
            return Err(invalid("--sweep ns conflicts with the grid given"))
        }
        Some(SweepAxis::Ns) if ns_sweep => Mode::SweepNs(a.common.ns.clone()),
        Some(SweepAxis::Ns) => Mode::SweepNs(DEFAULT_NS_GRID.to_vec()),
        Some(SweepAxis::N) if ns_sweep || a.fidelities.is_some() => {
            return Err(invalid("--sweep n conflicts with the grid given"))
        }
        Some(SweepAxis::N) => Mode::SweepN(a.qubits.clone().unwrap_or_else(|| DEFAULT_QUBIT_GRID.to_vec())),
        Some(SweepAxis::Fidelity) if ns_sweep || a.qubits.is_some() => {
            return Err(invalid("--sweep fidelity conflicts with the grid given"))
        }
        Some(SweepAxis::Fidelity) => {
            Mode::SweepFidelity(a.fidelities.clone().unwrap_or_else(|| DEFAULT_FIDELITY_GRID.to_vec()))
        }
    })
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, Error> {
    let mut out: Vec<Method> = Vec::new();
    for name in names {
        let m: Method = name.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

fn build_config(c: &CommonArgs, mode: Mode) -> Result<ExperimentConfig, Error> {
    let state: StateSpec = c.state.parse()?;
    if !matches!(mode, Mode::SweepNs(_)) && c.ns.len() != 1 {
        return Err(invalid("--ns takes a single value outside an N_s sweep"));
    }
    let mut config = ExperimentConfig::new(mode, state);
    config.events_per_setting = c.ns[0];
    config.trials = c.trials;
    config.seed = c.seed;
    config.estimators = parse_methods(&c.estimators)?;
    config.functionals = c.functionals.clone();
    config.gammas = c.gamma.clone();
    config.solver = c.solver.options();
    config.validate()?;
    Ok(config)
}

fn experiment(config: &ExperimentConfig, output: &OutputArgs) -> Result<(), Error> {
    let outcome = run_experiment(config)?;
    match &output.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            match output.format {
                Format::Csv => write_records_csv(&outcome, io::BufWriter::new(fs::File::create(dir.join("records.csv"))?))?,
                Format::Json => fs::write(dir.join("records.json"), records_json(&outcome)?)?,
            }
            fs::write(dir.join("summary.json"), summary_json(&outcome)?)?;
            print_table(&outcome)?;
        }
        None => {
            let stdout = io::stdout().lock();
            match output.format {
                Format::Csv => write_records_csv(&outcome, io::BufWriter::new(stdout))?,
                Format::Json => write!(io::BufWriter::new(stdout), "{}", summary_json(&outcome)?)?,
            }
        }
    }
    if outcome.trivial_witnesses > 0 {
        eprintln!(
            "warning: {} witness anchors had nothing to witness; their bounds are 0",
            outcome.trivial_witnesses
        );
    }
    outcome.check_failures()
}

fn print_table(outcome: &ExperimentOutcome) -> Result<(), Error> {
    let mut w = io::BufWriter::new(io::stdout().lock());
    writeln!(w, "{:<16} {:>5} {:<4} {:<22} {:>10} {:>10} {:>10}", "state", "N_s", "est", "functional", "mean", "std", "bias")?;
    for a in &outcome.aggregates {
        writeln!(
            w,
            "{:<16} {:>5} {:<4} {:<22} {:>10.5} {:>10.5} {:>10.5}",
            a.state, a.events, a.estimator, a.functional, a.stats.mean, a.stats.sample_std, a.stats.bias
        )?;
    }
    writeln!(w, "failed trials: {}/{}", outcome.trials_failed, outcome.trials_total)?;
    Ok(())
}

fn reconstruct(a: ReconstructArgs) -> Result<(), Error> {
    let state = a.state.as_deref().map(str::parse::<StateSpec>).transpose()?;
    if let Some(g) = a.gamma.iter().find(|g| !(0.0..1.0).contains(*g)) {
        return Err(invalid(format!("confidence level {g} outside [0, 1)")));
    }
    let solver = a.solver.options();
    solver.validate()?;
    let request = FileRequest {
        estimators: parse_methods(&a.estimators)?,
        functionals: a.functionals.clone(),
        state,
        anchor: a.anchor.clone(),
        gammas: a.gamma.clone(),
        solver,
    };
    let report = reconstruct_from_file(&a.counts, &request)?;
    let text = report_json(&report)?;
    emit(a.out.as_deref(), &text)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn schemes(a: SchemesArgs) -> Result<(), Error> {
    let scheme = TomographyScheme::new(a.n)?;
    let sv = scheme.singular_values();
    let frame = scheme.frame_residuals()?;
    let summary = serde_json::json!({
        "tool": "tomobias",
        "version": env!("CARGO_PKG_VERSION"),
        "n": a.n,
        "settings": scheme.settings().iter().map(|s| s.label()).collect::<Vec<_>>(),
        "outcomes": scheme.num_outcomes(),
        "b_shape": [scheme.num_outcomes(), 1usize << (2 * a.n)],
        "singular_value_min": sv.iter().cloned().fold(f64::INFINITY, f64::min),
        "singular_value_max": sv.iter().cloned().fold(0.0, f64::max),
        "condition_number": scheme.condition_number(),
        "frame_residual": frame.0,
        "dual_residual": frame.1,
    });
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        write_matrix(&dir.join("b_matrix.csv"), &scheme.b_matrix())?;
        write_matrix(&dir.join("dual_coefficients.csv"), &scheme.b_pseudo_inverse())?;
    }
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    emit(None, &(text + "\n"))
}

fn write_matrix(path: &Path, m: &nalgebra::DMatrix<f64>) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::InternalConsistency(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
