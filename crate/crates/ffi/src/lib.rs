//! C interface to the tomobias estimators.
//!
//! Objects are opaque handles created by `tb_*_new`-style functions and
//! released with the matching `tb_*_free`. Every fallible call returns a
//! [`TbStatus`]; after a failure `tb_last_error_message` describes it. The
//! message is kept per thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tomobias::estimators::{reconstruct, Method, ReconstructionResult, SolverOptions};
use tomobias::functionals::{hoeffding_penalty, witness_for};
use tomobias::sampling::toss_frequencies;
use tomobias::{Error, FrequencyData, FunctionalSpec, HermitianOperator, QuantumState, SeedPolicy, StateSpec, TomographyScheme};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    InvalidArgument = 1,
    IllPosedScheme = 2,
    InternalConsistency = 3,
    DegenerateGuess = 4,
    Load = 5,
    TooManyFailures = 6,
    Io = 7,
    NullPointer = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TbMethod {
    Lin = 0,
    Ml = 1,
    Ls = 2,
}

impl From<TbMethod> for Method {
    fn from(m: TbMethod) -> Self {
        match m {
            TbMethod::Lin => Method::Lin,
            TbMethod::Ml => Method::Ml,
            TbMethod::Ls => Method::Ls,
        }
    }
}

/// Solver settings; obtain defaults from `tb_solver_options_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TbSolverOptions {
    pub max_iterations: usize,
    pub target_tolerance: f64,
    pub certificate_tolerance: f64,
    pub probability_floor: f64,
    pub ls_restarts: usize,
}

impl From<TbSolverOptions> for SolverOptions {
    fn from(o: TbSolverOptions) -> Self {
        SolverOptions {
            max_iterations: o.max_iterations,
            target_tolerance: o.target_tolerance,
            certificate_tolerance: o.certificate_tolerance,
            probability_floor: o.probability_floor,
            ls_restarts: o.ls_restarts,
            record_history: false,
        }
    }
}

/// Convergence report of a reconstruction.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TbReconstructionInfo {
    pub converged: bool,
    pub physical: bool,
    pub iterations: usize,
    /// NaN for linear inversion.
    pub target_value: f64,
    pub certificate_residual: f64,
}

/// Pauli tomography scheme on `n` qubits.
pub struct TbScheme(TomographyScheme);

/// Hermitian matrix, e.g. a density matrix or an estimate.
pub struct TbOperator(HermitianOperator);

/// Counted outcome frequencies.
pub struct TbFrequencies(FrequencyData);

/// Result of a reconstruction.
pub struct TbReconstruction(ReconstructionResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TbStatus {
    match e {
        Error::InvalidArgument(_) => TbStatus::InvalidArgument,
        Error::IllPosedScheme(_) => TbStatus::IllPosedScheme,
        Error::InternalConsistency(_) => TbStatus::InternalConsistency,
        Error::DegenerateGuess(_) => TbStatus::DegenerateGuess,
        Error::Load { .. } => TbStatus::Load,
        Error::TooManyFailures { .. } => TbStatus::TooManyFailures,
        Error::Io(_) => TbStatus::Io,
    }
}

struct Fail(TbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tomobias".into());
            TbStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TbStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

fn need(len: usize, want: usize, what: &str) -> Result<(), Fail> {
    if len < want {
        Err(Fail(TbStatus::BufferTooSmall, format!("{what} holds {len}, needs {want}")))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn tb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

#[no_mangle]
pub extern "C" fn tb_solver_options_default() -> TbSolverOptions {
    let d = SolverOptions::default();
    TbSolverOptions {
        max_iterations: d.max_iterations,
        target_tolerance: d.target_tolerance,
        certificate_tolerance: d.certificate_tolerance,
        probability_floor: d.probability_floor,
        ls_restarts: d.ls_restarts,
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_scheme_new(n: usize, out: *mut *mut TbScheme) -> TbStatus {
    guard(|| put(out, TbScheme(TomographyScheme::new(n)?)))
}

/// # Safety
/// `scheme` must come from `tb_scheme_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn tb_scheme_free(scheme: *mut TbScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Hilbert-space dimension `2ⁿ`, 0 for a null handle.
///
/// # Safety
/// `scheme` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tb_scheme_dim(scheme: *const TbScheme) -> usize {
    scheme.as_ref().map_or(0, |s| s.0.dim())
}

/// Number of outcomes `6ⁿ`, 0 for a null handle.
///
/// # Safety
/// `scheme` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tb_scheme_num_outcomes(scheme: *const TbScheme) -> usize {
    scheme.as_ref().map_or(0, |s| s.0.num_outcomes())
}

/// Noisy benchmark state from a spec such as `"ghz:4@F=0.8"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_state_from_spec(spec: *const c_char, out: *mut *mut TbOperator) -> TbStatus {
    guard(|| {
        let spec: StateSpec = text(spec, "spec")?.parse()?;
        let rho = tomobias::make_state(&spec)?;
        put(out, TbOperator(rho.into_operator()))
    })
}

/// Hermitian operator from row-major real and imaginary parts of length `dim²`.
///
/// # Safety
/// `re` and `im` must hold `dim²` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_operator_from_parts(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut TbOperator,
) -> TbStatus {
    guard(|| {
        let len = dim.checked_mul(dim).ok_or_else(|| Fail(TbStatus::InvalidArgument, "dimension overflow".into()))?;
        let re = slice(re, len, "re")?;
        let im = slice(im, len, "im")?;
        put(out, TbOperator(HermitianOperator::from_parts(dim, re, im)?))
    })
}

/// # Safety
/// `op` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tb_operator_free(op: *mut TbOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Matrix dimension, 0 for a null handle.
///
/// # Safety
/// `op` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tb_operator_dim(op: *const TbOperator) -> usize {
    op.as_ref().map_or(0, |o| o.0.dim())
}

/// Writes row-major real and imaginary parts; each buffer needs `dim²` slots.
///
/// # Safety
/// `re` and `im` must be valid for `len` values each.
#[no_mangle]
pub unsafe extern "C" fn tb_operator_parts(op: *const TbOperator, re: *mut f64, im: *mut f64, len: usize) -> TbStatus {
    guard(|| {
        let op = &borrow(op, "operator")?.0;
        let d = op.dim();
        need(len, d * d, "buffer")?;
        let re = slice_mut(re, len, "re")?;
        let im = slice_mut(im, len, "im")?;
        for i in 0..d {
            for j in 0..d {
                let z = op.get(i, j);
                re[i * d + j] = z.re;
                im[i * d + j] = z.im;
            }
        }
        Ok(())
    })
}

/// Smallest eigenvalue.
///
/// # Safety
/// `op` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_operator_min_eigenvalue(op: *const TbOperator, out: *mut f64) -> TbStatus {
    guard(|| write(out, borrow(op, "operator")?.0.min_eigenvalue()))
}

/// Outcome probabilities `tr(ρ M_ν)`, flattened as `ν = 2ⁿ·s + r`.
///
/// # Safety
/// Handles must be live; `out` must hold `len ≥ 6ⁿ` values.
#[no_mangle]
pub unsafe extern "C" fn tb_born_probabilities(
    scheme: *const TbScheme,
    state: *const TbOperator,
    out: *mut f64,
    len: usize,
) -> TbStatus {
    guard(|| {
        let scheme = &borrow(scheme, "scheme")?.0;
        let rho = QuantumState::new(borrow(state, "state")?.0.clone())?;
        let p = scheme.born_probabilities(&rho)?;
        need(len, p.len(), "output")?;
        slice_mut(out, len, "output")?[..p.len()].copy_from_slice(&p);
        Ok(())
    })
}

/// Multinomial counts with `events` per setting from the stream
/// `(seed, trial, label)`.
///
/// # Safety
/// `probs` must hold `6ⁿ` values, `label` must be a NUL-terminated string and
/// `counts` must hold `len ≥ 6ⁿ` values.
#[no_mangle]
pub unsafe extern "C" fn tb_toss_counts(
    scheme: *const TbScheme,
    probs: *const f64,
    events: u64,
    seed: u64,
    trial: u64,
    label: *const c_char,
    counts: *mut u64,
    len: usize,
) -> TbStatus {
    guard(|| {
        let scheme = &borrow(scheme, "scheme")?.0;
        let m = scheme.num_outcomes();
        let p = slice(probs, m, "probs")?;
        let mut rng = SeedPolicy::new(seed, trial, text(label, "label")?).rng();
        let f = toss_frequencies(p, scheme.dim(), events, &mut rng)?;
        need(len, m, "counts")?;
        let values = &f.counts().expect("tossed data carries counts").values;
        slice_mut(counts, len, "counts")?[..m].copy_from_slice(values);
        Ok(())
    })
}

/// Frequencies from `6ⁿ` counts, each setting summing to `events`.
///
/// # Safety
/// `counts` must hold `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_frequencies_from_counts(
    scheme: *const TbScheme,
    counts: *const u64,
    len: usize,
    events: u64,
    out: *mut *mut TbFrequencies,
) -> TbStatus {
    guard(|| {
        let scheme = &borrow(scheme, "scheme")?.0;
        if len != scheme.num_outcomes() {
            return Err(Fail(
                TbStatus::InvalidArgument,
                format!("{len} counts for {} outcomes", scheme.num_outcomes()),
            ));
        }
        let c = slice(counts, len, "counts")?.to_vec();
        put(out, TbFrequencies(FrequencyData::from_counts(scheme.dim(), events, c)?))
    })
}

/// # Safety
/// `f` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tb_frequencies_free(f: *mut TbFrequencies) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Reconstructs with `method`; `options` may be null for defaults.
///
/// # Safety
/// Handles must be live; `options` null or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_reconstruct(
    scheme: *const TbScheme,
    freqs: *const TbFrequencies,
    method: TbMethod,
    options: *const TbSolverOptions,
    out: *mut *mut TbReconstruction,
) -> TbStatus {
    guard(|| {
        let scheme = &borrow(scheme, "scheme")?.0;
        let f = &borrow(freqs, "frequencies")?.0;
        let opts = options.as_ref().map_or_else(SolverOptions::default, |o| (*o).into());
        put(out, TbReconstruction(reconstruct(method.into(), f, scheme, &opts)?))
    })
}

/// # Safety
/// `r` must come from `tb_reconstruct` or be null.
#[no_mangle]
pub unsafe extern "C" fn tb_reconstruction_free(r: *mut TbReconstruction) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_reconstruction_info(r: *const TbReconstruction, out: *mut TbReconstructionInfo) -> TbStatus {
    guard(|| {
        let r = &borrow(r, "reconstruction")?.0;
        write(
            out,
            TbReconstructionInfo {
                converged: r.converged,
                physical: r.estimate.as_state().is_some(),
                iterations: r.iterations,
                target_value: r.target_value,
                certificate_residual: r.certificate_residual,
            },
        )
    })
}

/// Copies the estimate into a new operator handle.
///
/// # Safety
/// `r` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_reconstruction_operator(r: *const TbReconstruction, out: *mut *mut TbOperator) -> TbStatus {
    guard(|| put(out, TbOperator(borrow(r, "reconstruction")?.0.operator().clone())))
}

/// Evaluates a functional such as `"fid"`, `"neg:01|23"` or `"qfi:jz"`;
/// `state_spec` names the reference state for fidelities.
///
/// # Safety
/// Strings must be NUL-terminated; `op` live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_functional_evaluate(
    functional: *const c_char,
    state_spec: *const c_char,
    op: *const TbOperator,
    out: *mut f64,
) -> TbStatus {
    guard(|| {
        let state: StateSpec = text(state_spec, "state_spec")?.parse()?;
        let spec = FunctionalSpec::parse(text(functional, "functional")?, &state)?;
        write(out, spec.evaluate(&borrow(op, "operator")?.0)?)
    })
}

/// `√(h² |ln(1−γ)| / (2N_s))`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_hoeffding_penalty(h_squared: f64, gamma: f64, events: u64, out: *mut f64) -> TbStatus {
    guard(|| write(out, hoeffding_penalty(h_squared, gamma, events)?))
}

/// Witness for `functional` anchored at the state `anchor`, contracted with
/// `freqs`: writes `Σ l f` to `value` and the level-`gamma` bound to `bound`.
/// `trivial` is set when the anchor offered nothing to witness.
///
/// # Safety
/// Strings must be NUL-terminated, handles live and output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn tb_witness_bound(
    scheme: *const TbScheme,
    functional: *const c_char,
    state_spec: *const c_char,
    anchor: *const TbOperator,
    freqs: *const TbFrequencies,
    gamma: f64,
    value: *mut f64,
    bound: *mut f64,
    trivial: *mut bool,
) -> TbStatus {
    guard(|| {
        let scheme = &borrow(scheme, "scheme")?.0;
        let state: StateSpec = text(state_spec, "state_spec")?.parse()?;
        let spec = FunctionalSpec::parse(text(functional, "functional")?, &state)?;
        let anchor = QuantumState::new(borrow(anchor, "anchor")?.0.clone())?;
        let f = &borrow(freqs, "frequencies")?.0;
        let w = witness_for(&spec, &anchor, scheme)?;
        let (v, b) = (w.contract(f)?, w.confidence_bound(f, gamma)?);
        write(value, v)?;
        write(bound, b)?;
        write(trivial, w.is_trivial())
    })
}
