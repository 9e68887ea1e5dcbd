//! C ABI over the `bichea` solver.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_get` functions and released with the matching `*_free`. Every fallible
//! function returns a [`BicheaStatus`]; on failure a message is kept per
//! thread and can be read with [`bichea_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bichea::benchmarks::BenchmarkEntry;
use bichea::{estimate_rho, get_problem, run, wilcoxon_rank_sum, Error, Profile, RunConfig, RunResult, WilcoxonMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BicheaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownProblem = 3,
    InvalidInput = 4,
    Unverified = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BicheaProfile {
    Optimistic = 0,
    Pessimistic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BicheaWilcoxonMode {
    Exact = 0,
    Normal = 1,
    Auto = 2,
}

/// A registered benchmark problem.
pub struct BicheaProblem {
    entry: BenchmarkEntry,
}

/// Solver settings; starts at the defaults.
pub struct BicheaConfig {
    config: RunConfig,
}

/// Outcome of one solver run.
pub struct BicheaResult {
    result: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: BicheaStatus, message: impl Into<String>) -> BicheaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
    status
}

fn from_error(e: Error) -> BicheaStatus {
    let status = match &e {
        Error::UnknownProblem { .. } => BicheaStatus::UnknownProblem,
        Error::Unverified { .. } => BicheaStatus::Unverified,
        Error::Io(_) => BicheaStatus::Internal,
        _ => BicheaStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning a panic into `Internal`.
fn guard(f: impl FnOnce() -> BicheaStatus) -> BicheaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(BicheaStatus::Internal, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(BicheaStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len` bytes. Returns the full message length without the
/// terminator, so a caller can size a retry.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn bichea_last_error(buf: *mut c_char, len: usize) -> usize {
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

/// Looks up a registered problem by id.
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bichea_problem_get(id: *const c_char, out: *mut *mut BicheaProblem) -> BicheaStatus {
    guard(|| {
        non_null!(id, out);
        let Ok(id) = CStr::from_ptr(id).to_str() else {
            return fail(BicheaStatus::InvalidUtf8, "problem id is not UTF-8");
        };
        match get_problem(id) {
            Ok(entry) => {
                *out = Box::into_raw(Box::new(BicheaProblem { entry }));
                BicheaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `problem` must come from [`bichea_problem_get`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn bichea_problem_free(problem: *mut BicheaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Variable counts of both levels.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bichea_problem_dims(
    problem: *const BicheaProblem,
    upper_dim: *mut usize,
    lower_dim: *mut usize,
) -> BicheaStatus {
    guard(|| {
        non_null!(problem, upper_dim, lower_dim);
        let p = &(*problem).entry.problem;
        *upper_dim = p.upper_dim;
        *lower_dim = p.lower_dim;
        BicheaStatus::Ok
    })
}

/// Best-known `(F, f)` of the problem.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bichea_problem_best_known(
    problem: *const BicheaProblem,
    upper: *mut f64,
    lower: *mut f64,
) -> BicheaStatus {
    guard(|| {
        non_null!(problem, upper, lower);
        let e = &(*problem).entry;
        *upper = e.best_known_upper;
        *lower = e.best_known_lower;
        BicheaStatus::Ok
    })
}

/// Monte Carlo share of the variable box satisfying every explicit
/// constraint.
///
/// # Safety
/// `problem` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bichea_problem_rho(
    problem: *const BicheaProblem,
    samples: usize,
    repeats: usize,
    seed: u64,
    out: *mut f64,
) -> BicheaStatus {
    guard(|| {
        non_null!(problem, out);
        let e = &(*problem).entry;
        let delta = e.delta_eq.unwrap_or(RunConfig::default().delta_eq);
        match estimate_rho(&e.problem, samples, repeats, delta, seed) {
            Ok(r) => {
                *out = r;
                BicheaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// A configuration holding the default settings.
#[no_mangle]
pub extern "C" fn bichea_config_new() -> *mut BicheaConfig {
    Box::into_raw(Box::new(BicheaConfig {
        config: RunConfig::default(),
    }))
}

/// # Safety
/// `config` must come from [`bichea_config_new`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_free(config: *mut BicheaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Master seed of the run's random streams. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_seed(config: *mut BicheaConfig, value: u64) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.master_seed = value;
        BicheaStatus::Ok
    })
}

/// Population size. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_population(config: *mut BicheaConfig, value: usize) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.population_size = value;
        BicheaStatus::Ok
    })
}

/// Generation budget. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_generations(config: *mut BicheaConfig, value: usize) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.generations = value;
        BicheaStatus::Ok
    })
}

/// Traversal threshold `T`. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_threshold(config: *mut BicheaConfig, value: u32) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.crossover.threshold = value;
        BicheaStatus::Ok
    })
}

/// Traversal coefficient `r`. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_r(config: *mut BicheaConfig, value: f64) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.crossover.r = value;
        BicheaStatus::Ok
    })
}

/// Crossover rate. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_crossover_rate(config: *mut BicheaConfig, value: f64) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.crossover.crossover_rate = value;
        BicheaStatus::Ok
    })
}

/// Clone-count exponent `beta`. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_beta(config: *mut BicheaConfig, value: f64) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.beta = value;
        BicheaStatus::Ok
    })
}

/// Equality tolerance. Values are checked when solving.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_delta_eq(config: *mut BicheaConfig, value: f64) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        let c = &mut (*config).config;
        c.delta_eq = value;
        BicheaStatus::Ok
    })
}

/// Sets the profile from a [`BicheaProfile`] code.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bichea_config_set_profile(config: *mut BicheaConfig, profile: u32) -> BicheaStatus {
    guard(|| {
        non_null!(config);
        (*config).config.profile = match profile {
            p if p == BicheaProfile::Optimistic as u32 => Profile::Optimistic,
            p if p == BicheaProfile::Pessimistic as u32 => Profile::Pessimistic,
            p => return fail(BicheaStatus::InvalidInput, format!("unknown profile code {p}")),
        };
        BicheaStatus::Ok
    })
}

/// Runs the solver once. The configuration is validated first.
///
/// # Safety
/// `problem` and `config` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bichea_solve(
    problem: *const BicheaProblem,
    config: *const BicheaConfig,
    out: *mut *mut BicheaResult,
) -> BicheaStatus {
    guard(|| {
        non_null!(problem, config, out);
        match run(&(*problem).entry.problem, &(*config).config) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(BicheaResult { result }));
                BicheaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `result` must come from [`bichea_solve`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn bichea_result_free(result: *mut BicheaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Final `(F, f)` and whether every constraint holds there.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bichea_result_fitness(
    result: *const BicheaResult,
    upper: *mut f64,
    lower: *mut f64,
    feasible: *mut bool,
) -> BicheaStatus {
    guard(|| {
        non_null!(result, upper, lower, feasible);
        let b = &(*result).result.best;
        *upper = b.upper_fitness;
        *lower = b.lower_fitness;
        *feasible = b.is_feasible();
        BicheaStatus::Ok
    })
}

/// Objective evaluations spent by the run.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bichea_result_evaluations(result: *const BicheaResult, out: *mut u64) -> BicheaStatus {
    guard(|| {
        non_null!(result, out);
        *out = (*result).result.evaluation_count;
        BicheaStatus::Ok
    })
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> BicheaStatus {
    *written = values.len();
    if len < values.len() {
        return fail(
            BicheaStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        );
    }
    if !values.is_empty() {
        if buf.is_null() {
            return fail(BicheaStatus::NullPointer, "null pointer: buf");
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    BicheaStatus::Ok
}

/// Copies the final upper-level variables. `written` always receives the
/// required length, also when the buffer is too small.
///
/// # Safety
/// `buf` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn bichea_result_upper_vars(
    result: *const BicheaResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> BicheaStatus {
    guard(|| {
        non_null!(result, written);
        copy_out(&(*result).result.best.x_u, buf, len, written)
    })
}

/// Lower-level counterpart of [`bichea_result_upper_vars`].
///
/// # Safety
/// `buf` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn bichea_result_lower_vars(
    result: *const BicheaResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> BicheaStatus {
    guard(|| {
        non_null!(result, written);
        copy_out(&(*result).result.best.x_l, buf, len, written)
    })
}

/// Two-tailed rank-sum p-value of `a` against `b`; `mode` is a
/// [`BicheaWilcoxonMode`] code.
///
/// # Safety
/// `a` and `b` must be valid for `na` and `nb` values.
#[no_mangle]
pub unsafe extern "C" fn bichea_wilcoxon(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    mode: u32,
    out: *mut f64,
) -> BicheaStatus {
    guard(|| {
        non_null!(a, b, out);
        let a = std::slice::from_raw_parts(a, na);
        let b = std::slice::from_raw_parts(b, nb);
        let mode = match mode {
            m if m == BicheaWilcoxonMode::Exact as u32 => WilcoxonMode::Exact,
            m if m == BicheaWilcoxonMode::Normal as u32 => WilcoxonMode::Normal,
            m if m == BicheaWilcoxonMode::Auto as u32 => WilcoxonMode::Auto,
            m => return fail(BicheaStatus::InvalidInput, format!("unknown rank-sum mode code {m}")),
        };
        match wilcoxon_rank_sum(a, b, mode) {
            Ok(p) => {
                *out = p;
                BicheaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bichea_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
