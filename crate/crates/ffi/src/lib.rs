//! C interface to `agog-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns an [`AgogStatus`]
//! and, on failure, leaves a message readable through
//! [`agog_last_error_message`] on the calling thread. Strings returned by the
//! library are freed with [`agog_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use agog_core::algorithms::RunResult;
use agog_core::config::ExperimentConfig;
use agog_core::harness::{aggregate, aggregate_csv, run_experiment, run_single};
use agog_core::problems::ProblemSpec;
use agog_core::trace::RunTrace;
use agog_core::{schedules, CallCounts, Error, OracleBundle, PairVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgogStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or a rejected spec or configuration.
    Config = 3,
    /// The run diverged; a result holding the partial trace is still returned.
    Diverged = 4,
    InvalidArgument = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A built problem instance.
pub struct AgogProblem {
    spec: ProblemSpec,
    bundle: OracleBundle,
}

/// The outcome of one solver run.
pub struct AgogResult {
    trace: RunTrace,
    calls: CallCounts,
    iterations: u64,
    /// Absent after divergence.
    output: Option<PairVector>,
}

impl From<RunResult> for AgogResult {
    fn from(r: RunResult) -> Self {
        Self {
            trace: r.trace,
            calls: r.calls,
            iterations: r.iterations,
            output: Some(r.final_ag),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: AgogStatus, msg: impl Into<String>) -> AgogStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> AgogStatus {
    match e {
        Error::Diverged { .. } => AgogStatus::Diverged,
        Error::DimensionMismatch { .. } => AgogStatus::InvalidArgument,
        _ => AgogStatus::Config,
    }
}

fn guarded(f: impl FnOnce() -> AgogStatus) -> AgogStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(AgogStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, AgogStatus> {
    if p.is_null() {
        return Err(fail(AgogStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(AgogStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn agog_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn agog_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a problem from the JSON of a `problem` config section.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agog_problem_from_json(json: *const c_char, out: *mut *mut AgogProblem) -> AgogStatus {
    guarded(|| {
        if out.is_null() {
            return fail(AgogStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec: ProblemSpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(AgogStatus::Config, format!("problem: {e}")),
        };
        match spec.build() {
            Ok(bundle) => {
                *out = Box::into_raw(Box::new(AgogProblem { spec, bundle }));
                AgogStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `p` must come from [`agog_problem_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn agog_problem_free(p: *mut AgogProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live problem; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agog_problem_dims(p: *const AgogProblem, n: *mut usize, m: *mut usize) -> AgogStatus {
    if p.is_null() || n.is_null() || m.is_null() {
        return fail(AgogStatus::NullPointer, "null argument");
    }
    let (a, b) = (*p).bundle.dims();
    *n = a;
    *m = b;
    AgogStatus::Ok
}

/// Copies `z* = (x*, y*)` into `buf`, which holds `len` doubles.
///
/// # Safety
/// `p` must be a live problem; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn agog_problem_optimum(p: *const AgogProblem, buf: *mut f64, len: usize) -> AgogStatus {
    if p.is_null() || buf.is_null() {
        return fail(AgogStatus::NullPointer, "null argument");
    }
    let Some(z) = (*p).bundle.optimum() else {
        return fail(AgogStatus::InvalidArgument, "this problem has no known minimax point");
    };
    copy_out(z.as_slice(), buf, len)
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> AgogStatus {
    if len < src.len() {
        return fail(AgogStatus::BufferTooSmall, format!("need {} doubles, got {len}", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    AgogStatus::Ok
}

/// Runs one algorithm on `problem`. `run_json` is a config without its
/// `problem` section: `algorithm` (exactly one), `run` (exactly one seed) and
/// an optional `noise`. On [`AgogStatus::Diverged`], `out` receives the
/// partial trace.
///
/// # Safety
/// `problem` must be live, `run_json` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn agog_solve(
    problem: *const AgogProblem,
    run_json: *const c_char,
    out: *mut *mut AgogResult,
) -> AgogStatus {
    guarded(|| {
        if problem.is_null() || out.is_null() {
            return fail(AgogStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let text = match read_str(run_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let problem = &*problem;
        let mut doc: serde_json::Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return fail(AgogStatus::Config, e.to_string()),
        };
        let Some(obj) = doc.as_object_mut() else {
            return fail(AgogStatus::Config, "run description must be a JSON object");
        };
        if obj.contains_key("problem") {
            return fail(AgogStatus::Config, "`problem`: given by the handle");
        }
        obj.insert("problem".into(), serde_json::to_value(&problem.spec).expect("spec serializes"));
        let cfg = match ExperimentConfig::from_json_str(&doc.to_string()) {
            Ok(c) => c,
            Err(e) => return fail(AgogStatus::Config, e.to_string()),
        };
        let ([alg], [seed]) = (cfg.algorithm.0.as_slice(), cfg.run.seeds.as_slice()) else {
            return fail(AgogStatus::InvalidArgument, "exactly one algorithm and one seed per call");
        };
        match run_single(&problem.bundle, &cfg, alg, *seed, &cfg.hash()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(AgogResult::from(inner)));
                AgogStatus::Ok
            }
            Err(e) => {
                let status = status_of(&e);
                let msg = e.to_string();
                if let Error::Diverged { partial, .. } = e {
                    let last = partial.rows.last().copied();
                    let partial = AgogResult {
                        calls: CallCounts {
                            h: last.map_or(0, |r| r.h_calls),
                            f: last.map_or(0, |r| r.f_calls),
                        },
                        iterations: last.map_or(0, |r| r.iter),
                        trace: *partial,
                        output: None,
                    };
                    *out = Box::into_raw(Box::new(partial));
                }
                fail(status, msg)
            }
        }
    })
}

/// # Safety
/// `r` must come from [`agog_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn agog_result_free(r: *mut AgogResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Iterations performed. Zero for a null handle.
///
/// # Safety
/// `r` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn agog_result_iterations(r: *const AgogResult) -> u64 {
    r.as_ref().map_or(0, |r| r.iterations)
}

/// Coupling-oracle calls. Zero for a null handle.
///
/// # Safety
/// `r` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn agog_result_h_calls(r: *const AgogResult) -> u64 {
    r.as_ref().map_or(0, |r| r.calls.h)
}

/// Individual-oracle calls. Zero for a null handle.
///
/// # Safety
/// `r` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn agog_result_f_calls(r: *const AgogResult) -> u64 {
    r.as_ref().map_or(0, |r| r.calls.f)
}

/// Squared distance to `z*` in the last trace row; NaN when unknown.
///
/// # Safety
/// `r` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn agog_result_final_sq_dist(r: *const AgogResult) -> f64 {
    r.as_ref()
        .and_then(|r| r.trace.rows.last())
        .map_or(f64::NAN, |row| row.sq_dist)
}

/// Copies the output iterate `(x, y)` into `buf`. Fails after divergence.
///
/// # Safety
/// `r` must be live; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn agog_result_output(r: *const AgogResult, buf: *mut f64, len: usize) -> AgogStatus {
    if r.is_null() || buf.is_null() {
        return fail(AgogStatus::NullPointer, "null argument");
    }
    match &(*r).output {
        Some(z) => copy_out(z.as_slice(), buf, len),
        None => fail(AgogStatus::InvalidArgument, "a diverged run has no output iterate"),
    }
}

/// The trace as CSV. Free with [`agog_string_free`]; null on failure.
///
/// # Safety
/// `r` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn agog_result_trace_csv(r: *const AgogResult) -> *mut c_char {
    let Some(r) = r.as_ref() else {
        set_error("null result");
        return ptr::null_mut();
    };
    match r.trace.to_csv_string() {
        Ok(s) => to_c(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Runs a full experiment config and returns its cross-seed aggregate as
/// CSV through `csv_out`. Nothing is written to disk.
///
/// # Safety
/// `config_json` must be NUL-terminated; `csv_out` writable.
#[no_mangle]
pub unsafe extern "C" fn agog_run_experiment_json(config_json: *const c_char, csv_out: *mut *mut c_char) -> AgogStatus {
    guarded(|| {
        if csv_out.is_null() {
            return fail(AgogStatus::NullPointer, "null output");
        }
        *csv_out = ptr::null_mut();
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let res = ExperimentConfig::from_json_str(text)
            .and_then(|cfg| run_experiment(&cfg))
            .and_then(|out| aggregate(&out.traces()))
            .and_then(|rows| aggregate_csv(&rows));
        match res {
            Ok(csv) => {
                *csv_out = to_c(csv);
                AgogStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Deterministic stepsize at iteration `k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agog_eta(k: u64, l: f64, l_h: f64, out: *mut f64) -> AgogStatus {
    if out.is_null() {
        return fail(AgogStatus::NullPointer, "null output");
    }
    match schedules::eta_agog(k, l, l_h) {
        Ok(v) => {
            *out = v;
            AgogStatus::Ok
        }
        Err(e) => fail(AgogStatus::InvalidArgument, e.to_string()),
    }
}

/// Stochastic stepsize at iteration `k` with damping `d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agog_eta_stochastic(k: u64, l: f64, l_h: f64, d: f64, out: *mut f64) -> AgogStatus {
    if out.is_null() {
        return fail(AgogStatus::NullPointer, "null output");
    }
    match schedules::eta_sagog(k, l, l_h, d) {
        Ok(v) => {
            *out = v;
            AgogStatus::Ok
        }
        Err(e) => fail(AgogStatus::InvalidArgument, e.to_string()),
    }
}
