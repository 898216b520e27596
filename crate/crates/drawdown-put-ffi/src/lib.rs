//! C ABI over the pricer: an opaque solved-model handle, flat status codes,
//! and out-pointer results. Everything crosses the boundary on the asset
//! scale (prices, strike, drawdown cap as a ratio); log coordinates stay
//! internal. The build script writes the matching header to
//! `include/drawdown_put.h`.

use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use drawdown_put::{estimate_price, ContractState, Error, McConfig, ModelParams, PriceModel};

/// Status code returned by every fallible call.
pub type DdputStatus = c_int;

/// The call succeeded.
pub const DDPUT_OK: DdputStatus = 0;
/// A model or simulation parameter is out of range.
pub const DDPUT_INVALID_PARAMETER: DdputStatus = 1;
/// The queried state is outside the admissible domain.
pub const DDPUT_INVALID_STATE: DdputStatus = 2;
/// The parameters produce a degenerate exponent basis.
pub const DDPUT_DEGENERATE_MODEL: DdputStatus = 3;
/// The barrier solver did not converge (or an internal computation panicked).
pub const DDPUT_SOLVER_FAILED: DdputStatus = 4;
/// A required pointer argument was null.
pub const DDPUT_NULL_POINTER: DdputStatus = 5;

/// Opaque solved pricing model. Create with `ddput_model_new`, release with
/// `ddput_model_free`; safe to share between threads for reads.
pub struct DdputModel {
    inner: PriceModel,
}

fn status_of(error: &Error) -> DdputStatus {
    match error {
        Error::InvalidParameter(_) => DDPUT_INVALID_PARAMETER,
        Error::LaplacePole(_) | Error::DegenerateExponents(..) => DDPUT_DEGENERATE_MODEL,
        Error::BarrierBracketing(_) => DDPUT_SOLVER_FAILED,
        Error::OutOfRegime { .. } | Error::InvalidState { .. } => DDPUT_INVALID_STATE,
    }
}

/// Builds a model from scalar parameters and solves the optimal barrier.
/// `strike` and `cap_ratio` mirror the CLI flags: the option pays
/// `(strike - S)^+` and dies when `S` falls to `S_max / cap_ratio`, so
/// `cap_ratio` must exceed 1. On success `*out_model` owns the handle; on any
/// error it is set to null.
///
/// # Safety
/// `out_model` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ddput_model_new(
    r: f64,
    sigma: f64,
    lambda: f64,
    rho: f64,
    strike: f64,
    cap_ratio: f64,
    out_model: *mut *mut DdputModel,
) -> DdputStatus {
    if out_model.is_null() {
        return DDPUT_NULL_POINTER;
    }
    *out_model = std::ptr::null_mut();
    if !(cap_ratio.is_finite() && cap_ratio > 1.0) {
        return DDPUT_INVALID_PARAMETER;
    }
    let solved = catch_unwind(|| -> Result<PriceModel, Error> {
        let params = ModelParams::new(r, sigma, lambda, rho)?;
        PriceModel::new(&params, strike, cap_ratio.ln())
    });
    match solved {
        Ok(Ok(model)) => {
            *out_model = Box::into_raw(Box::new(DdputModel { inner: model }));
            DDPUT_OK
        }
        Ok(Err(error)) => status_of(&error),
        Err(_) => DDPUT_SOLVER_FAILED,
    }
}

/// Releases a handle returned by `ddput_model_new`. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle from `ddput_model_new` that has not been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn ddput_model_free(model: *mut DdputModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the optimal exercise level on the asset scale (`e^{a*}`): exercise
/// is optimal the first time `S` is at or below it while the drawdown cap is
/// still slack.
///
/// # Safety
/// `model` must be a live handle and `out_level` a valid f64 pointer.
#[no_mangle]
pub unsafe extern "C" fn ddput_optimal_barrier(
    model: *const DdputModel,
    out_level: *mut f64,
) -> DdputStatus {
    if model.is_null() || out_level.is_null() {
        return DDPUT_NULL_POINTER;
    }
    *out_level = (*model).inner.a_star().exp();
    DDPUT_OK
}

/// Writes the option value at the state `(s, smax)`, both on the asset scale
/// with `0 < s <= smax`.
///
/// # Safety
/// `model` must be a live handle and `out_price` a valid f64 pointer.
#[no_mangle]
pub unsafe extern "C" fn ddput_price(
    model: *const DdputModel,
    s: f64,
    smax: f64,
    out_price: *mut f64,
) -> DdputStatus {
    if model.is_null() || out_price.is_null() {
        return DDPUT_NULL_POINTER;
    }
    if !(s.is_finite() && s > 0.0 && smax.is_finite() && smax > 0.0) {
        return DDPUT_INVALID_STATE;
    }
    match (*model).inner.value(s.ln(), smax.ln()) {
        Ok(value) => {
            *out_price = value;
            DDPUT_OK
        }
        Err(error) => status_of(&error),
    }
}

/// Reports the voluntary-exercise rule at the running maximum `smax`: when a
/// boundary exists, `*out_exists` is true and `*out_level` is the asset level
/// at or below which exercising is optimal; when the cap has moved out of the
/// money (no voluntary exercise), `*out_exists` is false and `*out_level` is
/// 0.
///
/// # Safety
/// `model` must be a live handle; `out_level` and `out_exists` must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn ddput_exercise_boundary(
    model: *const DdputModel,
    smax: f64,
    out_level: *mut f64,
    out_exists: *mut bool,
) -> DdputStatus {
    if model.is_null() || out_level.is_null() || out_exists.is_null() {
        return DDPUT_NULL_POINTER;
    }
    if !(smax.is_finite() && smax > 0.0) {
        return DDPUT_INVALID_STATE;
    }
    match (*model).inner.exercise_boundary(smax.ln()) {
        Some(boundary) => {
            *out_level = boundary.exp();
            *out_exists = true;
        }
        None => {
            *out_level = 0.0;
            *out_exists = false;
        }
    }
    DDPUT_OK
}

/// Runs the independent Monte Carlo estimator at the state `(s, smax)` and
/// writes the sample mean, its standard error, and the worst-case bias from
/// paths cut at `t_max`. Estimates are bit-reproducible for a fixed
/// `(seed, n_workers)` pair.
///
/// # Safety
/// `model` must be a live handle; the three out pointers must be valid f64
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn ddput_mc_estimate(
    model: *const DdputModel,
    s: f64,
    smax: f64,
    n_paths: u64,
    dt: f64,
    t_max: f64,
    seed: u64,
    n_workers: u32,
    out_mean: *mut f64,
    out_std_err: *mut f64,
    out_truncation_bound: *mut f64,
) -> DdputStatus {
    if model.is_null() || out_mean.is_null() || out_std_err.is_null() || out_truncation_bound.is_null()
    {
        return DDPUT_NULL_POINTER;
    }
    if !(s.is_finite() && s > 0.0 && smax.is_finite() && smax > 0.0) {
        return DDPUT_INVALID_STATE;
    }
    let Ok(n_paths) = usize::try_from(n_paths) else {
        return DDPUT_INVALID_PARAMETER;
    };
    if n_paths == 0 || n_workers == 0 || !(dt.is_finite() && dt > 0.0) || !(t_max.is_finite() && t_max > 0.0)
    {
        return DDPUT_INVALID_PARAMETER;
    }
    let pricer = &(*model).inner;
    let contract = match ContractState::new(pricer.strike_k(), pricer.drawdown_c(), s.ln(), smax.ln()) {
        Ok(contract) => contract,
        Err(error) => return status_of(&error),
    };
    let cfg = McConfig { n_paths, dt, t_max, seed, n_workers: n_workers as usize };
    let estimate = catch_unwind(AssertUnwindSafe(|| {
        estimate_price(pricer.params(), &contract, pricer.a_star(), &cfg)
    }));
    match estimate {
        Ok(estimate) => {
            *out_mean = estimate.mean;
            *out_std_err = estimate.std_err;
            *out_truncation_bound = estimate.truncation_bound;
            DDPUT_OK
        }
        Err(_) => DDPUT_SOLVER_FAILED,
    }
}

/// Returns a static, nul-terminated description of a status code.
#[no_mangle]
pub extern "C" fn ddput_status_message(status: DdputStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        DDPUT_OK => b"ok\0",
        DDPUT_INVALID_PARAMETER => b"invalid parameter\0",
        DDPUT_INVALID_STATE => b"invalid state\0",
        DDPUT_DEGENERATE_MODEL => b"degenerate model\0",
        DDPUT_SOLVER_FAILED => b"solver failed\0",
        DDPUT_NULL_POINTER => b"null pointer\0",
        _ => b"unknown status\0",
    };
    text.as_ptr().cast()
}
