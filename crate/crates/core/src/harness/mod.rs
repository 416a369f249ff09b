//! Monte Carlo experiments, statistics and file formats.
//!
//! Trials run on the current rayon pool. Each trial draws from its own
//! stream, keyed by the master seed, the trial index and a label
//! (`tomo` for the observed data, `tomo/ns=…`, `tomo/n=…` or `tomo/F=…` at
//! sweep points, `bootstrap/<b>` for resamples, `witness/anchor` and
//! `witness/probe` for the two witness stages), and results are folded in
//! trial order, so outputs do not depend on the number of threads.

mod config;
mod io;
mod run;
mod stats;

pub use config::{
    BootstrapKind, ExperimentConfig, Mode, Point, DEFAULT_FIDELITY_GRID, DEFAULT_GAMMAS, DEFAULT_NS_GRID,
    DEFAULT_QUBIT_GRID, DEFAULT_RESAMPLES, DEFAULT_TRIALS, MAX_FAILURE_FRACTION,
};
pub use io::{
    counts_json, parse_counts, read_counts, reconstruct_from_file, records_json, report_json, summary_json,
    write_records_csv, BoundValue, EstimateReport, FileRequest, FunctionalValue, MatrixParts, ReconstructionReport,
    VERSION,
};
pub use run::{
    bootstrap_dataset, bound_label, run_bias_experiment, run_bootstrap, run_experiment, run_sweep,
    run_witness_experiment, AggregateRow, BootstrapSummary, ExperimentOutcome, TrialRecord, Trend,
    BOOT_MEAN_SUFFIX, BOOT_STD_SUFFIX, WITNESS_SUFFIX,
};
pub use stats::AggregateStats;
