//! Acceptance criteria 1 to 13, one PASS/FAIL line each.
//!
//! Criteria 5 and 7 run with fewer trials than the full protocol unless
//! `TOMOBIAS_ACCEPTANCE=full` is set. `TOMOBIAS_ACCEPTANCE_ONLY=1,5` limits
//! the run to the listed criteria.

use std::collections::BTreeMap;
use std::process::Command;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tomobias::estimators::project_to_physical;
use tomobias::functionals::{entropy, entropy_gradient, jz_operator, purity, purity_gradient, qfi, qfi_gradient};
use tomobias::harness::{
    run_bias_experiment, run_bootstrap, run_sweep, run_witness_experiment, AggregateRow, BootstrapKind,
    ExperimentConfig, Mode,
};
use tomobias::pauli::pauli_operator;
use tomobias::random::ginibre_state;
use tomobias::sampling::toss_frequencies;
use tomobias::{
    linear_inversion, make_state, FrequencyData, HermitianOperator, Method, QuantumState, SeedPolicy, StateSpec,
    TomographyScheme,
};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Scale {
    bootstrap_trials: usize,
    sweep_trials: usize,
}

fn main() {
    let full = std::env::var("TOMOBIAS_ACCEPTANCE").is_ok_and(|v| v == "full");
    let scale = if full {
        Scale {
            bootstrap_trials: 500,
            sweep_trials: 500,
        }
    } else {
        Scale {
            bootstrap_trials: 40,
            sweep_trials: 200,
        }
    };
    let only: Option<Vec<u32>> = std::env::var("TOMOBIAS_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |k: u32| only.as_ref().map_or(true, |o| o.contains(&k));

    let mut results: BTreeMap<u32, Outcome> = BTreeMap::new();
    let mut aggregates: Vec<AggregateRow> = Vec::new();

    if (1..=4).any(wanted) {
        for (k, o) in fidelity_criteria(&mut aggregates) {
            if wanted(k) {
                results.insert(k, o);
            }
        }
    }
    if wanted(5) {
        results.insert(5, bootstrap_criterion(&scale, &mut aggregates));
    }
    if wanted(6) {
        results.insert(6, witness_criterion(&mut aggregates));
    }
    if wanted(7) {
        results.insert(7, qubit_sweep_criterion(&scale, &mut aggregates));
    }
    if wanted(8) {
        results.insert(8, frame_criterion());
    }
    if wanted(9) {
        results.insert(9, gradient_criterion());
    }
    if wanted(10) {
        results.insert(10, coverage_criterion(&mut aggregates));
    }
    if wanted(11) {
        results.insert(11, proposition_criterion(&mut aggregates));
    }
    if wanted(12) {
        results.insert(12, mse_criterion(&aggregates));
    }
    if wanted(13) {
        results.insert(13, determinism_criterion());
    }

    let mut failed = 0;
    for (k, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("acceptance criterion {k:>2}: {tag}  {}", o.detail);
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed{}",
        results.len() - failed,
        if full { "" } else { " (reduced trial counts for 5 and 7)" }
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn config(mode: Mode, state: &str, trials: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(mode, state.parse().unwrap());
    c.trials = trials;
    c.seed = SEED;
    c
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn fidelity_criteria(aggregates: &mut Vec<AggregateRow>) -> Vec<(u32, Outcome)> {
    let c = config(Mode::Bias, "ghz:4@F=0.8", 500);
    let out = run_bias_experiment(&c).expect("bias experiment");
    aggregates.extend(out.aggregates.iter().cloned());
    let row = |m| out.aggregate(m, "fid:ghz").unwrap().stats.clone();
    let (lin, ml, ls) = (row(Method::Lin), row(Method::Ml), row(Method::Ls));
    let check = |name: &str, s: &tomobias::harness::AggregateStats, target: f64, tol: f64, lo: f64, hi: f64| {
        let pass = within(s.mean, target, tol) && (lo..=hi).contains(&s.sample_std);
        outcome(
            pass,
            format!(
                "{name} fidelity mean {:.4} (want {target} ± {tol}), std {:.4} (want [{lo}, {hi}])",
                s.mean, s.sample_std
            ),
        )
    };
    let f_lin = out.values(Method::Lin, "fid:ghz");
    let f_ml = out.values(Method::Ml, "fid:ghz");
    let f_ls = out.values(Method::Ls, "fid:ghz");
    let t = f_lin.len() as f64;
    let ls_le_ml = f_ls.iter().zip(&f_ml).filter(|(a, b)| a <= b).count() as f64 / t;
    let ml_le_lin = f_ml.iter().zip(&f_lin).filter(|(a, b)| a <= b).count() as f64 / t;
    vec![
        (1, check("LIN", &lin, 0.800, 0.003, 0.009, 0.015)),
        (2, check("ML", &ml, 0.788, 0.005, 0.007, 0.013)),
        (3, check("LS", &ls, 0.749, 0.006, 0.007, 0.013)),
        (
            4,
            outcome(
                ls_le_ml >= 0.99 && ml_le_lin >= 0.98,
                format!(
                    "F_LS <= F_ML in {:.1}% (want >= 99%), F_ML <= F_LIN in {:.1}% (want >= 98%) of {} trials",
                    100.0 * ls_le_ml,
                    100.0 * ml_le_lin,
                    f_lin.len()
                ),
            ),
        ),
    ]
}

fn bootstrap_criterion(scale: &Scale, aggregates: &mut Vec<AggregateRow>) -> Outcome {
    let targets = [
        (BootstrapKind::Parametric, Method::Ml, 0.777, 0.006),
        (BootstrapKind::Parametric, Method::Ls, 0.700, 0.008),
        (BootstrapKind::Nonparametric, Method::Ml, 0.780, 0.006),
        (BootstrapKind::Nonparametric, Method::Ls, 0.714, 0.008),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [BootstrapKind::Parametric, BootstrapKind::Nonparametric] {
        let mut c = config(
            Mode::Bootstrap {
                kind,
                resamples: 100,
            },
            "ghz:4@F=0.8",
            scale.bootstrap_trials,
        );
        c.estimators = vec![Method::Ml, Method::Ls];
        let out = run_bootstrap(&c).expect("bootstrap");
        aggregates.extend(out.aggregates.iter().cloned());
        for &(k, m, target, tol) in targets.iter().filter(|t| t.0 == kind) {
            let row = out.aggregate(m, "fid:ghz/boot-mean").unwrap();
            let ok = within(row.stats.mean, target, tol);
            pass &= ok;
            let name = match k {
                BootstrapKind::Parametric => "param",
                BootstrapKind::Nonparametric => "nonparam",
            };
            parts.push(format!(
                "{name} {m} {:.4} (error bar {:.4}; want {target} ± {tol})",
                row.stats.mean,
                row.mean_error_bar.unwrap_or(f64::NAN)
            ));
        }
    }
    outcome(
        pass,
        format!("bootstrap grand means, T={} B=100: {}", scale.bootstrap_trials, parts.join(", ")),
    )
}

fn witness_criterion(aggregates: &mut Vec<AggregateRow>) -> Outcome {
    let mut c = config(Mode::Witness, "sep:4@F=0.8", 500);
    c.estimators = vec![Method::Ml, Method::Ls];
    c.functionals = vec!["neg:01|23".into()];
    let sep = run_witness_experiment(&c).expect("separable witness run");
    aggregates.extend(sep.aggregates.iter().cloned());
    let mean = |out: &tomobias::harness::ExperimentOutcome, m, col: &str| out.aggregate(m, col).unwrap().stats.mean;
    let ml = mean(&sep, Method::Ml, "neg:01|23");
    let ls = mean(&sep, Method::Ls, "neg:01|23");
    let bound = mean(&sep, Method::Lin, "neg:01|23/bound@0.68");
    let sep_ok = ml > 0.01 && ls > 0.01 && bound <= 0.005;

    let mut c = config(Mode::Witness, "ghz:4@F=0.8", 500);
    c.estimators = vec![Method::Ml, Method::Ls];
    c.functionals = vec!["neg:01|23".into()];
    let ghz = run_witness_experiment(&c).expect("GHZ witness run");
    aggregates.extend(ghz.aggregates.iter().cloned());
    let rho0 = make_state(&"ghz:4@F=0.8".parse().unwrap()).unwrap();
    let oracle = negativity_oracle(rho0.operator(), &[0, 1]);
    let bounds = ghz.values(Method::Lin, "neg:01|23/bound@0.68");
    let exceed = bounds.iter().filter(|&&b| b > oracle).count();
    let allowed = ((1.0 - 0.68) * bounds.len() as f64).floor() as usize;
    outcome(
        sep_ok && exceed <= allowed,
        format!(
            "sep:4 mean N_ML {ml:.4}, N_LS {ls:.4} (want > 0.01), bound {bound:.4} (want <= 0.005); \
             ghz:4 bound > N(rho0)={oracle:.4} in {exceed}/{} trials (allowed {allowed})",
            bounds.len()
        ),
    )
}

fn qubit_sweep_criterion(scale: &Scale, aggregates: &mut Vec<AggregateRow>) -> Outcome {
    let mut c = config(Mode::SweepN(vec![2, 3, 4, 5]), "ghz:4@F=0.8", scale.sweep_trials);
    c.estimators = vec![Method::Ls];
    let out = run_sweep(&c).expect("qubit sweep");
    aggregates.extend(out.aggregates.iter().cloned());
    let trend = out.trends.iter().find(|t| t.estimator == Method::Ls).unwrap();
    let steps: Vec<String> = trend
        .abs_bias
        .windows(2)
        .zip(&trend.step_sem)
        .map(|(w, s)| format!("{:+.4} (2SEM {:.4})", w[1] - w[0], 2.0 * s))
        .collect();
    outcome(
        trend.increasing_beyond(2.0),
        format!(
            "|bias_LS| over n=2..5 at T={}: {:?}, steps {}",
            scale.sweep_trials,
            trend.abs_bias.iter().map(|b| format!("{b:.4}")).collect::<Vec<_>>(),
            steps.join(", ")
        ),
    )
}

/// Explicit `Σ_ν A_ν tr(M_ν X)` and `Σ_ν tr(A_ν X) M_ν` from dense matrices.
fn frame_criterion() -> Outcome {
    let mut worst_frame = 0.0f64;
    let mut worst_dual = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 1..=3 {
        let scheme = TomographyScheme::new(n).unwrap();
        let projectors: Vec<DMatrix<Complex64>> = scheme.projectors().iter().map(|m| m.matrix().clone()).collect();
        let duals: Vec<DMatrix<Complex64>> = scheme.dual_frame().iter().map(|a| a.matrix().clone()).collect();
        let d = scheme.dim();
        let mut tests: Vec<DMatrix<Complex64>> = (0..(1usize << (2 * n))).map(|mu| pauli_operator(n, mu).matrix().clone()).collect();
        for _ in 0..5 {
            tests.push(tomobias::random::gaussian_hermitian(n, &mut rng).matrix().clone());
        }
        for x in &tests {
            let mut frame = DMatrix::<Complex64>::zeros(d, d);
            let mut dual = DMatrix::<Complex64>::zeros(d, d);
            for (m, a) in projectors.iter().zip(&duals) {
                frame += a * Complex64::from((m * x).trace().re);
                dual += m * Complex64::from((a * x).trace().re);
            }
            worst_frame = worst_frame.max((frame - x).map(|z| z.norm()).max());
            worst_dual = worst_dual.max((dual - x).map(|z| z.norm()).max());
        }
    }
    let mut worst_trip = 0.0f64;
    for k in 0..50 {
        let n = 2 + k % 2;
        let scheme = TomographyScheme::new(n).unwrap();
        let rho = ginibre_state(n, &mut rng);
        let p = scheme.born_probabilities(&rho).unwrap();
        let f = FrequencyData::from_frequencies(scheme.dim(), p).unwrap();
        let back = linear_inversion(&f, &scheme).unwrap();
        worst_trip = worst_trip.max(back.max_abs_diff(rho.operator()));
    }
    let tol = 1e-9;
    outcome(
        worst_frame <= tol && worst_dual <= tol && worst_trip <= tol,
        format!(
            "n=1..3 frame {worst_frame:.1e}, dual {worst_dual:.1e}; round trip on 50 states {worst_trip:.1e} (tol {tol:.0e})"
        ),
    )
}

fn traceless_direction(n: usize, i: usize) -> HermitianOperator {
    let d = (1usize << n) as f64;
    pauli_operator(n, i + 1) * (1.0 / d.sqrt())
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm
}

fn gradient_criterion() -> Outcome {
    let n = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let jz = jz_operator(n);
    let h = 1e-5;
    let dirs: Vec<HermitianOperator> = (0..15).map(|i| traceless_direction(n, i)).collect();
    let mut worst = [0.0f64; 3];
    for _ in 0..20 {
        let g = ginibre_state(n, &mut rng);
        let mixed = HermitianOperator::maximally_mixed(4);
        let rho = QuantumState::new(&(g.operator() * 0.8) + &(mixed * 0.2)).unwrap();
        let op = rho.operator();
        let fd = |f: &dyn Fn(&HermitianOperator) -> f64| -> Vec<f64> {
            dirs.iter()
                .map(|s| (f(&(op + &(s * h))) - f(&(op - &(s * h)))) / (2.0 * h))
                .collect()
        };
        let purity_fd = fd(&|x| purity(x));
        let entropy_fd = fd(&|x| entropy(x).unwrap());
        let qfi_fd = fd(&|x| qfi(x, &jz).unwrap());
        worst[0] = worst[0].max(relative_error(&purity_gradient(op), &purity_fd));
        worst[1] = worst[1].max(relative_error(&entropy_gradient(op).unwrap(), &entropy_fd));
        worst[2] = worst[2].max(relative_error(&qfi_gradient(op, &jz).unwrap(), &qfi_fd));
    }
    outcome(
        worst.iter().all(|&w| w <= 1e-5),
        format!(
            "max relative error on 20 full-rank 2-qubit states: purity {:.1e}, entropy {:.1e}, qfi {:.1e} (tol 1e-5)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn coverage_criterion(aggregates: &mut Vec<AggregateRow>) -> Outcome {
    let mut c = config(Mode::Witness, "ghz:2@F=0.9", 2000);
    c.estimators = vec![Method::Lin];
    c.functionals = vec!["fid".into(), "neg:0|1".into(), "purity".into()];
    let out = run_witness_experiment(&c).expect("coverage run");
    aggregates.extend(out.aggregates.iter().cloned());
    let rho0 = make_state(&"ghz:2@F=0.9".parse().unwrap()).unwrap();
    let truths = [
        ("fid:ghz", 0.9),
        ("neg:0|1", negativity_oracle(rho0.operator(), &[0])),
        ("purity", purity(rho0.operator())),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, truth) in truths {
        for gamma in [0.68, 0.99] {
            let bounds = out.values(Method::Lin, &format!("{label}/bound@{gamma}"));
            let covered = bounds.iter().filter(|&&b| b <= truth).count() as f64 / bounds.len() as f64;
            pass &= covered - gamma >= -0.02;
            parts.push(format!("{label}@{gamma} {covered:.4}"));
        }
    }
    outcome(pass, format!("coverage over 2000 trials on ghz:2@F=0.9: {}", parts.join(", ")))
}

fn proposition_criterion(aggregates: &mut Vec<AggregateRow>) -> Outcome {
    let state = "ghz:2@F=0.9";
    let c = config(Mode::Bias, state, 2000);
    let out = run_bias_experiment(&c).expect("proposition run");
    aggregates.extend(out.aggregates.iter().cloned());
    let f0 = 0.9;

    let spec: StateSpec = state.parse().unwrap();
    let scheme = TomographyScheme::new(2).unwrap();
    let rho0 = make_state(&spec).unwrap();
    let p = scheme.born_probabilities(&rho0).unwrap();
    let psi = spec.target_vector().unwrap();
    let projected: Vec<f64> = (0..2000)
        .map(|t| {
            let mut rng = SeedPolicy::new(SEED, t, "tomo").rng();
            let f = toss_frequencies(&p, 4, 100, &mut rng).unwrap();
            project_to_physical(&linear_inversion(&f, &scheme).unwrap()).operator().expectation(&psi)
        })
        .collect();
    let proj = tomobias::harness::AggregateStats::from_values(&projected, f0).unwrap();
    let stat = |m| out.aggregate(m, "fid:ghz").unwrap().stats.clone();
    let rows = [
        ("LIN", stat(Method::Lin)),
        ("ML", stat(Method::Ml)),
        ("LS", stat(Method::Ls)),
        ("proj", proj),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in &rows {
        let z = s.bias / s.sem;
        pass &= if *name == "LIN" { z.abs() <= 3.0 } else { z < -5.0 };
        parts.push(format!("{name} {:+.5} ({z:+.1} SEM)", s.bias));
    }
    outcome(
        pass,
        format!(
            "fidelity bias on ghz:2@F=0.9, T=2000 (LIN within 3 SEM, others below -5 SEM): {}",
            parts.join(", ")
        ),
    )
}

fn mse_criterion(aggregates: &[AggregateRow]) -> Outcome {
    let worst = aggregates
        .iter()
        .map(|a| a.stats.decomposition_residual().abs())
        .fold(0.0, f64::max);
    let bad = aggregates.iter().filter(|a| !a.stats.decomposition_holds()).count();
    outcome(
        bad == 0 && !aggregates.is_empty(),
        format!(
            "MSE - (variance + bias^2) on {} aggregate rows: max |residual| {worst:.1e}, {bad} beyond rounding",
            aggregates.len()
        ),
    )
}

fn determinism_criterion() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str, sub: &[&str], name: &str| {
        let out_dir = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_tomobias"))
            .args(sub)
            .args(["--state", "ghz:3@F=0.8", "--trials", "24", "--seed", "7", "--jobs", jobs])
            .arg("--out")
            .arg(&out_dir)
            .output()
            .expect("run CLI");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let records = std::fs::read(out_dir.join("records.csv")).unwrap();
        let summary = std::fs::read(out_dir.join("summary.json")).unwrap();
        (records, summary)
    };
    let mut identical = true;
    let mut parts = Vec::new();
    for (sub, extra) in [
        (vec!["simulate"], vec!["--functionals", "fid,purity"]),
        (vec!["witness"], vec!["--functionals", "neg:0|12"]),
        (vec!["bootstrap"], vec!["--resamples", "5", "--estimators", "ML"]),
    ] {
        let args: Vec<&str> = sub.iter().chain(&extra).copied().collect();
        let a = run("1", &args, &format!("{}-1", sub[0]));
        let b = run("4", &args, &format!("{}-4", sub[0]));
        let same = a == b;
        identical &= same;
        parts.push(format!("{} {}", sub[0], if same { "identical" } else { "differ" }));
    }
    outcome(identical, format!("--jobs 1 vs --jobs 4 outputs: {}", parts.join(", ")))
}

/// `Σ |λ⁻|` of the partial transpose, computed from the matrix entries.
fn negativity_oracle(op: &HermitianOperator, party_a: &[usize]) -> f64 {
    let d = op.dim();
    let n = d.trailing_zeros() as usize;
    let mask: usize = party_a.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    let pt = DMatrix::from_fn(d, d, |i, j| {
        let (ii, jj) = ((i & !mask) | (j & mask), (j & !mask) | (i & mask));
        op.get(ii, jj)
    });
    pt.symmetric_eigenvalues().iter().filter(|&&l| l < 0.0).map(|l| -l).sum()
}
