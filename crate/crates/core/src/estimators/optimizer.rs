//! Accelerated projected-gradient ascent over density matrices.
//!
//! Objectives are concave functions of the outcome probabilities
//! `P_ν = tr(ρ M_ν)`. Each step projects `y + t∇T(y)` back onto the state
//! set, with backtracking on `t` and momentum restarts whenever the target
//! would decrease, so accepted iterates ascend monotonically.
//!
//! The certificate is the Frank–Wolfe gap `λ_max(∇T) − tr(ρ∇T)`, which
//! bounds `T* − T(ρ)` from above for concave `T`.

use crate::operator::{HermitianOperator, QuantumState};
use crate::pauli::{from_pauli_coefficients, pauli_expectations};
use crate::scheme::TomographyScheme;

use super::newton::refine_on_face;
use super::projection::project_to_physical;
use super::SolverOptions;

/// A target function of the outcome probabilities.
pub(crate) trait Objective {
    fn value(&self, probs: &[f64]) -> f64;
    /// `∂T/∂P_ν` written into `out`.
    fn weights(&self, probs: &[f64], out: &mut [f64]);
    /// `−∂²T/∂P_ν²` written into `out`; the target is separable in `P`.
    fn curvature(&self, probs: &[f64], out: &mut [f64]);
    /// `T(P + δ) − T(P)`, accurate even when far below the resolution of `T`.
    fn increment(&self, probs: &[f64], delta: &[f64]) -> f64;
    /// False when some outcome with data has hit the probability floor.
    fn is_interior(&self, probs: &[f64]) -> bool;
}

/// `T_ML = Σ_ν f_ν log P_ν`.
pub(crate) struct LogLikelihood<'a> {
    pub freqs: &'a [f64],
    pub floor: f64,
}

impl Objective for LogLikelihood<'_> {
    fn value(&self, probs: &[f64]) -> f64 {
        self.freqs
            .iter()
            .zip(probs)
            .filter(|(f, _)| **f > 0.0)
            .map(|(f, p)| f * p.max(self.floor).ln())
            .sum()
    }

    fn weights(&self, probs: &[f64], out: &mut [f64]) {
        for ((w, &f), &p) in out.iter_mut().zip(self.freqs).zip(probs) {
            *w = if f > 0.0 && p > self.floor { f / p } else { 0.0 };
        }
    }

    fn curvature(&self, probs: &[f64], out: &mut [f64]) {
        for ((c, &f), &p) in out.iter_mut().zip(self.freqs).zip(probs) {
            *c = if f > 0.0 && p > self.floor { f / (p * p) } else { 0.0 };
        }
    }

    fn increment(&self, probs: &[f64], delta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&f, &p), &d) in self.freqs.iter().zip(probs).zip(delta) {
            if f == 0.0 {
                continue;
            }
            let q = p + d;
            acc += if p > self.floor && q > self.floor {
                f * (d / p).ln_1p()
            } else {
                f * (q.max(self.floor).ln() - p.max(self.floor).ln())
            };
        }
        acc
    }

    fn is_interior(&self, probs: &[f64]) -> bool {
        self.freqs
            .iter()
            .zip(probs)
            .all(|(f, p)| *f == 0.0 || *p > self.floor)
    }
}

/// `T_LS = −Σ_ν (f_ν − P_ν)²/P_ν` with the state-dependent denominator.
pub(crate) struct WeightedLeastSquares<'a> {
    pub freqs: &'a [f64],
    pub floor: f64,
}

impl Objective for WeightedLeastSquares<'_> {
    fn value(&self, probs: &[f64]) -> f64 {
        -self
            .freqs
            .iter()
            .zip(probs)
            .map(|(f, p)| (f - p).powi(2) / p.max(self.floor))
            .sum::<f64>()
    }

    fn weights(&self, probs: &[f64], out: &mut [f64]) {
        for ((w, &f), &p) in out.iter_mut().zip(self.freqs).zip(probs) {
            *w = if p > self.floor { (f / p).powi(2) - 1.0 } else { 0.0 };
        }
    }

    fn curvature(&self, probs: &[f64], out: &mut [f64]) {
        for ((c, &f), &p) in out.iter_mut().zip(self.freqs).zip(probs) {
            *c = if p > self.floor { 2.0 * f * f / (p * p * p) } else { 0.0 };
        }
    }

    fn increment(&self, probs: &[f64], delta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&f, &p), &d) in self.freqs.iter().zip(probs).zip(delta) {
            let q = p + d;
            acc += if p > self.floor && q > self.floor {
                // (f−p)²/p − (f−q)²/q = (q−p)(f²/(pq) − 1)
                d * (f * f / (p * q) - 1.0)
            } else {
                (f - p).powi(2) / p.max(self.floor) - (f - q).powi(2) / q.max(self.floor)
            };
        }
        acc
    }

    fn is_interior(&self, probs: &[f64]) -> bool {
        self.freqs
            .iter()
            .zip(probs)
            .all(|(f, p)| *f == 0.0 || *p > self.floor)
    }
}

pub(crate) struct Ascent {
    pub state: QuantumState,
    pub value: f64,
    pub iterations: usize,
    pub gap: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

struct Evaluator<'a, O: Objective> {
    objective: &'a O,
    scheme: &'a TomographyScheme,
    weights: Vec<f64>,
}

struct Point {
    op: HermitianOperator,
    probs: Vec<f64>,
    value: f64,
}

impl<'a, O: Objective> Evaluator<'a, O> {
    fn point(&self, op: HermitianOperator) -> Point {
        let probs = self.scheme.apply_b(&pauli_expectations(&op));
        self.point_with(op, probs)
    }

    fn point_with(&self, op: HermitianOperator, probs: Vec<f64>) -> Point {
        let value = self.objective.value(&probs);
        Point { op, probs, value }
    }

    /// `x + β(x − x_prev)`; probabilities follow by linearity.
    fn extrapolate(&self, x: &Point, prev: &Point, beta: f64) -> Point {
        let op = &(&x.op * (1.0 + beta)) - &(&prev.op * beta);
        let probs = x
            .probs
            .iter()
            .zip(&prev.probs)
            .map(|(a, b)| (1.0 + beta) * a - beta * b)
            .collect();
        self.point_with(op, probs)
    }

    /// `T(to) − T(from)` from the probability differences.
    fn increment(&self, from: &Point, to: &Point) -> f64 {
        let delta: Vec<f64> = to.probs.iter().zip(&from.probs).map(|(a, b)| a - b).collect();
        self.objective.increment(&from.probs, &delta)
    }

    fn gradient(&mut self, pt: &Point) -> HermitianOperator {
        self.objective.weights(&pt.probs, &mut self.weights);
        from_pauli_coefficients(self.scheme.num_qubits(), &self.scheme.apply_bt(&self.weights))
    }

    /// Newton refinement on the support face of `x`, with its gap, when it
    /// lowers the gap without losing more than rounding noise in the target.
    fn refine(&mut self, x: &Point, gap: f64) -> Option<(Point, f64)> {
        let op = refine_on_face(self.objective, self.scheme, &x.op)?;
        let pt = self.point(op);
        if self.increment(x, &pt) < -1e-13 * x.value.abs().max(1.0) {
            return None;
        }
        let new_gap = self.gap(&pt);
        (new_gap < gap).then_some((pt, new_gap))
    }

    /// Frank–Wolfe gap at `pt`.
    fn gap(&mut self, pt: &Point) -> f64 {
        let grad = self.gradient(pt);
        let lmax = *grad.eigh().values.last().expect("nonempty spectrum");
        let along: f64 = self.weights.iter().zip(&pt.probs).map(|(w, p)| w * p).sum();
        (lmax - along).max(0.0)
    }
}

/// How often (in iterations) the certificate is evaluated.
const GAP_EVERY: usize = 4;
/// Iterations of negligible relative change, with no certificate progress,
/// that count as stagnation.
const STALL_PATIENCE: usize = 32;
/// Relative decrease of the gap that counts as progress.
const GAP_PROGRESS: f64 = 0.01;
/// Gap below which Newton refinement on the support face is first tried;
/// later attempts wait for another tenfold decrease.
const NEWTON_TRIGGER: f64 = 1e-2;
/// The iteration continues until the gap is this fraction of the
/// certificate tolerance, or progress stalls.
const AIM: f64 = 1e-2;

pub(crate) fn maximize<O: Objective>(
    objective: &O,
    scheme: &TomographyScheme,
    init: &QuantumState,
    opts: &SolverOptions,
) -> Ascent {
    let mut ev = Evaluator {
        objective,
        scheme,
        weights: vec![0.0; scheme.num_outcomes()],
    };
    let mut x = ev.point(init.operator().clone());
    let mut momentum = 1.0_f64;
    // None while the extrapolated point coincides with x.
    let mut y: Option<Point> = None;
    let mut step = 1.0 / scheme.num_settings() as f64;
    let mut history = if opts.record_history { vec![x.value] } else { Vec::new() };
    let mut gap = ev.gap(&x);
    let mut best_gap = gap;
    let mut since_gap_progress = 0;
    let mut small_changes = 0;
    let mut iterations = 0;
    let mut newton_below = NEWTON_TRIGGER;
    let aim = AIM * opts.certificate_tolerance;

    while iterations < opts.max_iterations && gap > aim {
        iterations += 1;
        let base = y.as_ref().unwrap_or(&x);
        let grad = ev.gradient(base);
        let candidate = loop {
            let trial = ev.point(project_to_physical(&(&base.op + &(&grad * step))).into_operator());
            let rise = ev.increment(base, &trial);
            let diff = &trial.op - &base.op;
            let linear = grad.inner(&diff);
            let model = linear - diff.frobenius_norm().powi(2) / (2.0 * step);
            if rise >= model - 1e-12 * linear.abs() || step < 1e-18 {
                break trial;
            }
            step *= 0.5;
        };
        let from_x = y.is_none();
        let gain = ev.increment(&x, &candidate);

        if gain > 0.0 {
            let rel = gain / x.value.abs().max(f64::MIN_POSITIVE);
            let prev = std::mem::replace(&mut x, candidate);
            if opts.record_history {
                history.push(x.value);
            }
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            momentum = next;
            let ext = ev.extrapolate(&x, &prev, beta);
            y = if objective.is_interior(&ext.probs) {
                Some(ext)
            } else {
                momentum = 1.0;
                None
            };
            step *= 1.25;
            small_changes = if rel < opts.target_tolerance { small_changes + 1 } else { 0 };
        } else if from_x {
            // Backtracking guarantees a positive model increase, so a failed
            // step from x itself means gains are below rounding noise.
            gap = ev.gap(&x);
            if let Some((pt, g)) = ev.refine(&x, gap) {
                x = pt;
                gap = g;
                if gap <= aim {
                    break;
                }
            }
            return polish(&mut ev, x, gap, step, iterations, history, opts);
        } else {
            y = None;
            momentum = 1.0;
        }

        if iterations % GAP_EVERY == 0 {
            gap = ev.gap(&x);
            if gap < best_gap * (1.0 - GAP_PROGRESS) {
                best_gap = gap;
                since_gap_progress = 0;
            } else {
                since_gap_progress += GAP_EVERY;
            }
            let stalled = small_changes >= STALL_PATIENCE && since_gap_progress >= STALL_PATIENCE;
            if gap < newton_below || stalled {
                newton_below = gap * 0.1;
                if let Some((pt, g)) = ev.refine(&x, gap) {
                    if opts.record_history && pt.value > x.value {
                        history.push(pt.value);
                    }
                    x = pt;
                    gap = g;
                    best_gap = g;
                    since_gap_progress = 0;
                    small_changes = 0;
                    y = None;
                    momentum = 1.0;
                    if gap <= aim {
                        break;
                    }
                    continue;
                }
            }
            if stalled {
                break;
            }
        }
    }
    if iterations % GAP_EVERY != 0 && gap > aim {
        gap = ev.gap(&x);
    }
    finish(x, gap, iterations, history, opts)
}

fn finish(x: Point, gap: f64, iterations: usize, history: Vec<f64>, opts: &SolverOptions) -> Ascent {
    Ascent {
        converged: gap <= opts.certificate_tolerance,
        state: QuantumState::new_unchecked(x.op),
        value: x.value,
        iterations,
        gap,
        history,
    }
}

/// Polishing iterations without certificate progress before giving up.
const POLISH_PATIENCE: usize = 48;

/// Fixed-step projected gradient for the last digits, where target
/// increments drown in rounding and cannot be tested. The step is half the
/// last size accepted by backtracking, and the iterate with the smallest
/// certificate is returned.
fn polish<O: Objective>(
    ev: &mut Evaluator<'_, O>,
    x: Point,
    gap: f64,
    step: f64,
    mut iterations: usize,
    mut history: Vec<f64>,
    opts: &SolverOptions,
) -> Ascent {
    let step = 0.5 * step;
    let mut best = (gap, x);
    let mut current = ev.point(best.1.op.clone());
    let mut stale = 0;
    let aim = AIM * opts.certificate_tolerance;
    while iterations < opts.max_iterations && best.0 > aim && stale < POLISH_PATIENCE {
        iterations += 1;
        let grad = ev.gradient(&current);
        current = ev.point(project_to_physical(&(&current.op + &(&grad * step))).into_operator());
        let gap = ev.gap(&current);
        if gap < best.0 {
            if opts.record_history && history.last().is_none_or(|&v| current.value > v) {
                history.push(current.value);
            }
            best = (gap, ev.point(current.op.clone()));
            stale = 0;
        } else {
            stale += 1;
        }
    }
    let (gap, x) = best;
    finish(x, gap, iterations, history, opts)
}
