use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{reconstruct, Method, SolverOptions};
use crate::functionals::{witness_for, FunctionalSpec};
use crate::scheme::{FrequencyData, TomographyScheme};
use crate::states::{StateFamily, StateSpec};

use super::run::{ExperimentOutcome, TrialRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn header_line(outcome: &ExperimentOutcome) -> String {
    let c = &outcome.config;
    format!(
        "# tomobias {VERSION} mode={} state={} seed={}",
        c.mode.name(),
        c.state,
        c.seed
    )
}

/// Long-form CSV preceded by a `#` comment line echoing version and seed.
pub fn write_records_csv<W: Write>(outcome: &ExperimentOutcome, mut out: W) -> Result<()> {
    writeln!(out, "{}", header_line(outcome))?;
    let mut w = csv::Writer::from_writer(out);
    for r in &outcome.records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InternalConsistency(format!("csv: {other:?}")),
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    #[serde(flatten)]
    outcome: &'a ExperimentOutcome,
}

#[derive(Serialize)]
struct RecordsDocument<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    records: &'a [TrialRecord],
}

/// Aggregates, trends and the configuration echo.
pub fn summary_json(outcome: &ExperimentOutcome) -> Result<String> {
    let s = Summary {
        tool: "tomobias",
        version: VERSION,
        seed: outcome.config.seed,
        outcome,
    };
    to_json(&s)
}

pub fn records_json(outcome: &ExperimentOutcome) -> Result<String> {
    let doc = RecordsDocument {
        tool: "tomobias",
        version: VERSION,
        seed: outcome.config.seed,
        records: &outcome.records,
    };
    to_json(&doc)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountsFile {
    n: usize,
    #[serde(rename = "N_s")]
    events: u64,
    settings: Vec<SettingCounts>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingCounts {
    bases: String,
    counts: Vec<u64>,
}

/// Parses a counts document
/// `{"n": .., "N_s": .., "settings": [{"bases": "XZ", "counts": [..]}, ..]}`
/// with settings in canonical order.
pub fn parse_counts(text: &str, context: &str) -> Result<(TomographyScheme, FrequencyData)> {
    let load = |message: String| Error::Load {
        context: context.to_string(),
        message,
    };
    let doc: CountsFile = serde_json::from_str(text).map_err(|e| load(e.to_string()))?;
    let scheme = TomographyScheme::new(doc.n).map_err(|e| load(format!("field \"n\": {e}")))?;
    if doc.events == 0 {
        return Err(load("field \"N_s\": must be at least 1".into()));
    }
    if doc.settings.len() != scheme.num_settings() {
        return Err(load(format!(
            "field \"settings\": {} entries, expected {} for n = {}",
            doc.settings.len(),
            scheme.num_settings(),
            doc.n
        )));
    }
    let mut counts = Vec::with_capacity(scheme.num_outcomes());
    for (s, (entry, setting)) in doc.settings.iter().zip(scheme.settings()).enumerate() {
        let at = format!("settings[{s}]");
        if let Some(c) = entry.bases.chars().find(|c| !matches!(c, 'X' | 'Y' | 'Z')) {
            return Err(load(format!("{at}.bases {:?}: unknown basis {c:?}", entry.bases)));
        }
        if entry.bases != setting.label() {
            return Err(load(format!(
                "{at}.bases {:?}: expected {:?} in canonical order",
                entry.bases,
                setting.label()
            )));
        }
        if entry.counts.len() != scheme.dim() {
            return Err(load(format!(
                "{at}.counts: {} values, expected {}",
                entry.counts.len(),
                scheme.dim()
            )));
        }
        let total: u64 = entry.counts.iter().sum();
        if total != doc.events {
            return Err(load(format!(
                "{at} ({}): counts sum to {total}, expected N_s = {}",
                entry.bases, doc.events
            )));
        }
        counts.extend_from_slice(&entry.counts);
    }
    let f = FrequencyData::from_counts(scheme.dim(), doc.events, counts).map_err(|e| load(e.to_string()))?;
    Ok((scheme, f))
}

pub fn read_counts(path: &Path) -> Result<(TomographyScheme, FrequencyData)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_counts(&text, &path.display().to_string())
}

/// Serializes counted data in the format read by [`parse_counts`].
pub fn counts_json(f: &FrequencyData, scheme: &TomographyScheme) -> Result<String> {
    f.check_scheme(scheme)?;
    let counts = f.counts().ok_or_else(|| invalid("frequencies carry no counts"))?;
    let doc = CountsFile {
        n: scheme.num_qubits(),
        events: counts.events_per_setting,
        settings: scheme
            .settings()
            .iter()
            .zip(counts.values.chunks(scheme.dim()))
            .map(|(s, c)| SettingCounts {
                bases: s.label(),
                counts: c.to_vec(),
            })
            .collect(),
    };
    to_json(&doc)
}

/// Real and imaginary parts, row major.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixParts {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalValue {
    pub functional: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundValue {
    pub functional: String,
    pub witness: f64,
    pub gamma: f64,
    pub bound: f64,
    pub trivial: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub estimator: Method,
    pub converged: bool,
    pub iterations: usize,
    pub target_value: Option<f64>,
    pub cert_residual: f64,
    pub min_eigenvalue: f64,
    pub matrix: MatrixParts,
    pub functionals: Vec<FunctionalValue>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundValue>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub n: usize,
    #[serde(rename = "N_s")]
    pub events: u64,
    pub estimates: Vec<EstimateReport>,
}

/// Options for [`reconstruct_from_file`].
#[derive(Clone, Debug)]
pub struct FileRequest {
    pub estimators: Vec<Method>,
    pub functionals: Vec<String>,
    /// Reference state for `fid`; GHZ on the file's qubits when absent.
    pub state: Option<StateSpec>,
    /// Independent counts whose ML estimate anchors the LIN witnesses.
    pub anchor: Option<std::path::PathBuf>,
    pub gammas: Vec<f64>,
    pub solver: SolverOptions,
}

/// Loads counts, reconstructs with each estimator and reports functionals.
/// LIN additionally reports Hoeffding bounds when an anchor file is given.
pub fn reconstruct_from_file(path: &Path, request: &FileRequest) -> Result<ReconstructionReport> {
    let (scheme, f) = read_counts(path)?;
    let n = scheme.num_qubits();
    let state = match &request.state {
        Some(s) if s.n_qubits != n => {
            return Err(invalid(format!("state {s} does not have the file's {n} qubits")))
        }
        Some(s) => s.clone(),
        None => StateSpec::new(StateFamily::Ghz, n, 1.0)?,
    };
    let specs = request
        .functionals
        .iter()
        .map(|t| FunctionalSpec::parse(t, &state))
        .collect::<Result<Vec<_>>>()?;
    let witnesses = match &request.anchor {
        Some(anchor_path) => {
            let (anchor_scheme, anchor_data) = read_counts(anchor_path)?;
            if anchor_scheme.num_qubits() != n {
                return Err(invalid("anchor counts have a different qubit count"));
            }
            let anchor = reconstruct(Method::Ml, &anchor_data, &scheme, &request.solver)?;
            let state = anchor.estimate.as_state().expect("ML estimates are states").clone();
            specs
                .iter()
                .map(|s| witness_for(s, &state, &scheme))
                .collect::<Result<Vec<_>>>()?
        }
        None => Vec::new(),
    };
    let mut estimates = Vec::new();
    for &method in &request.estimators {
        let rec = reconstruct(method, &f, &scheme, &request.solver)?;
        let op = rec.operator();
        let d = op.dim();
        let matrix = MatrixParts {
            re: (0..d).map(|i| (0..d).map(|j| op.get(i, j).re).collect()).collect(),
            im: (0..d).map(|i| (0..d).map(|j| op.get(i, j).im).collect()).collect(),
        };
        let mut functionals = Vec::new();
        for spec in &specs {
            if rec.estimate.as_state().is_some() || spec.accepts_unphysical() {
                functionals.push(FunctionalValue {
                    functional: spec.label().to_string(),
                    value: spec.evaluate(op)?,
                });
            }
        }
        let mut bounds = Vec::new();
        if method == Method::Lin {
            for (spec, w) in specs.iter().zip(&witnesses) {
                let witness = w.contract(&f)?;
                for &gamma in &request.gammas {
                    bounds.push(BoundValue {
                        functional: spec.label().to_string(),
                        witness,
                        gamma,
                        bound: w.confidence_bound(&f, gamma)?,
                        trivial: w.is_trivial(),
                    });
                }
            }
        }
        estimates.push(EstimateReport {
            estimator: method,
            converged: rec.converged,
            iterations: rec.iterations,
            target_value: rec.target_value.is_finite().then_some(rec.target_value),
            cert_residual: rec.certificate_residual,
            min_eigenvalue: op.min_eigenvalue(),
            matrix,
            functionals,
            bounds,
        });
    }
    Ok(ReconstructionReport {
        tool: "tomobias",
        version: VERSION,
        n,
        events: f.events_per_setting().expect("loaded from counts"),
        estimates,
    })
}

pub fn report_json(report: &ReconstructionReport) -> Result<String> {
    to_json(report)
}
