//! C ABI over `metric_bandits`.
//!
//! Instances and algorithms cross the boundary as JSON in the library's
//! serde format. Every fallible function returns an [`MbStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`mb_last_error`]. Handles are opaque and freed with their `_free`
//! function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use metric_bandits::algorithms::{self, AlgorithmConfig};
use metric_bandits::instances::ProblemInstance;
use metric_bandits::simulator::{self, RegretCurve};
use metric_bandits::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidArgument = 4,
    OutOfRange = 5,
    Runtime = 6,
    Panic = 7,
}

/// A validated problem instance.
pub struct MbInstance(ProblemInstance);

/// A regret curve aggregated over seeds.
pub struct MbCurve(RegretCurve);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MbStatus, msg: impl Into<String>) -> MbStatus {
    set_error(msg.into());
    status
}

fn lib_error(e: Error) -> MbStatus {
    let status = match e {
        Error::Json(_) => MbStatus::InvalidJson,
        Error::InvalidParameter(_)
        | Error::InvalidPoint(_)
        | Error::InvalidMetric(_)
        | Error::InvalidPayoff(_)
        | Error::InvalidRewards(_)
        | Error::KindMismatch { .. }
        | Error::Config(_) => MbStatus::InvalidArgument,
        _ => MbStatus::Runtime,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> MbStatus) -> MbStatus {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(MbStatus::Panic, "panic inside metric_bandits"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, MbStatus> {
    if s.is_null() {
        return Err(fail(MbStatus::NullPointer, "string argument is NULL"));
    }
    // SAFETY: caller passes a NUL-terminated string
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|e| fail(MbStatus::InvalidUtf8, format!("argument is not UTF-8: {e}")))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `sqrt(8 i_ph / (2 + n))`.
#[no_mangle]
pub extern "C" fn mb_standard_radius(i_ph: u32, n: u64) -> f64 {
    algorithms::standard_radius(i_ph, n)
}

/// `mu + 2 r`.
#[no_mangle]
pub extern "C" fn mb_index(mu: f64, r: f64) -> f64 {
    algorithms::index(mu, r)
}

/// Net scale `phase_len^(-1/(d+2))`.
#[no_mangle]
pub extern "C" fn mb_naive_delta(phase_len: u64, d: f64) -> f64 {
    algorithms::naive_delta(phase_len, d)
}

/// # Safety
/// `out` must be NULL or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn mb_max_reward_one_radius(
    alpha: f64,
    n: u64,
    mu: f64,
    out: *mut f64,
) -> MbStatus {
    if out.is_null() {
        return fail(MbStatus::NullPointer, "out is NULL");
    }
    match algorithms::max_reward_one_radius(alpha, n, mu) {
        Ok(r) => {
            // SAFETY: checked non-null above
            unsafe { *out = r };
            MbStatus::Ok
        }
        Err(e) => lib_error(e),
    }
}

/// # Safety
/// `out` must be NULL or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn mb_chernoff_radius(alpha: f64, n: u64, x: f64, out: *mut f64) -> MbStatus {
    if out.is_null() {
        return fail(MbStatus::NullPointer, "out is NULL");
    }
    match algorithms::chernoff_radius(alpha, n, x) {
        Ok(r) => {
            // SAFETY: checked non-null above
            unsafe { *out = r };
            MbStatus::Ok
        }
        Err(e) => lib_error(e),
    }
}

/// Parse an instance from JSON (`metric`, `payoff`, `rewards`, `seed`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_from_json(
    json: *const c_char,
    out: *mut *mut MbInstance,
) -> MbStatus {
    guard(|| {
        if out.is_null() {
            return fail(MbStatus::NullPointer, "out is NULL");
        }
        // SAFETY: forwarded caller contract
        let text = match unsafe { read_str(json) } {
            Ok(s) => s,
            Err(s) => return s,
        };
        match serde_json::from_str::<ProblemInstance>(text) {
            Ok(inst) => {
                // SAFETY: checked non-null above
                unsafe { *out = Box::into_raw(Box::new(MbInstance(inst))) };
                MbStatus::Ok
            }
            Err(e) => fail(MbStatus::InvalidJson, format!("instance: {e}")),
        }
    })
}

/// Best expected payoff of the instance.
///
/// # Safety
/// `inst` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_mu_star(inst: *const MbInstance) -> f64 {
    // SAFETY: caller contract
    unsafe { inst.as_ref() }.map_or(f64::NAN, |i| i.0.mu_star())
}

/// # Safety
/// `inst` must be NULL or a handle from [`mb_instance_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_free(inst: *mut MbInstance) {
    if !inst.is_null() {
        // SAFETY: caller contract
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Replicate the algorithm described by `algorithm_json` over `n_seeds`
/// seeds. Results do not depend on the number of threads.
///
/// # Safety
/// `inst` must be a live handle, `algorithm_json` a NUL-terminated string,
/// `seeds` readable for `n_seeds` values and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_replicate(
    inst: *const MbInstance,
    algorithm_json: *const c_char,
    horizon: u64,
    seeds: *const u64,
    n_seeds: usize,
    out: *mut *mut MbCurve,
) -> MbStatus {
    guard(|| {
        if out.is_null() || seeds.is_null() {
            return fail(MbStatus::NullPointer, "out or seeds is NULL");
        }
        // SAFETY: caller contract
        let Some(inst) = (unsafe { inst.as_ref() }) else {
            return fail(MbStatus::NullPointer, "instance is NULL");
        };
        // SAFETY: forwarded caller contract
        let text = match unsafe { read_str(algorithm_json) } {
            Ok(s) => s,
            Err(s) => return s,
        };
        let config: AlgorithmConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(MbStatus::InvalidJson, format!("algorithm: {e}")),
        };
        // SAFETY: caller contract
        let seeds = unsafe { std::slice::from_raw_parts(seeds, n_seeds) };
        match simulator::replicate(&inst.0, &config, horizon, seeds) {
            Ok(curve) => {
                // SAFETY: checked non-null above
                unsafe { *out = Box::into_raw(Box::new(MbCurve(curve))) };
                MbStatus::Ok
            }
            Err(e) => lib_error(e),
        }
    })
}

/// Number of checkpoints, 0 for NULL.
///
/// # Safety
/// `curve` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_curve_len(curve: *const MbCurve) -> usize {
    // SAFETY: caller contract
    unsafe { curve.as_ref() }.map_or(0, |c| c.0.points.len())
}

/// Checkpoint `k`: round, mean regret and its standard error.
///
/// # Safety
/// `curve` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_curve_point(
    curve: *const MbCurve,
    k: usize,
    t: *mut u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> MbStatus {
    // SAFETY: caller contract
    let Some(c) = (unsafe { curve.as_ref() }) else {
        return fail(MbStatus::NullPointer, "curve is NULL");
    };
    if t.is_null() || mean.is_null() || stderr.is_null() {
        return fail(MbStatus::NullPointer, "output pointer is NULL");
    }
    let Some(p) = c.0.points.get(k) else {
        return fail(
            MbStatus::OutOfRange,
            format!("checkpoint {k} of {}", c.0.points.len()),
        );
    };
    // SAFETY: checked non-null above
    unsafe {
        *t = p.t;
        *mean = p.mean;
        *stderr = p.stderr;
    }
    MbStatus::Ok
}

/// Fitted regret exponent over the last `window_fraction` of checkpoints.
/// Writes NaN when the window holds a zero regret.
///
/// # Safety
/// `curve` must be a live handle and `gamma` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_curve_fit_exponent(
    curve: *const MbCurve,
    window_fraction: f64,
    gamma: *mut f64,
) -> MbStatus {
    // SAFETY: caller contract
    let Some(c) = (unsafe { curve.as_ref() }) else {
        return fail(MbStatus::NullPointer, "curve is NULL");
    };
    if gamma.is_null() {
        return fail(MbStatus::NullPointer, "gamma is NULL");
    }
    match simulator::fit_exponent(&c.0, window_fraction) {
        Ok(f) => {
            // SAFETY: checked non-null above
            unsafe { *gamma = f.gamma.unwrap_or(f64::NAN) };
            MbStatus::Ok
        }
        Err(e) => lib_error(e),
    }
}

/// # Safety
/// `curve` must be NULL or a handle from [`mb_replicate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_curve_free(curve: *mut MbCurve) {
    if !curve.is_null() {
        // SAFETY: caller contract
        drop(unsafe { Box::from_raw(curve) });
    }
}
