//! C ABI over the `padam` crate.
//!
//! Every fallible function returns a [`PadamStatus`]; on anything but
//! `PADAM_STATUS_OK` a message is available from [`padam_last_error`] until
//! the next call on the same thread. Handles are opaque and must be released
//! with their matching `_free` function. Strings returned through `out`
//! pointers are released with [`padam_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use padam::harness::{execute_trial, TrialConfig, TrialStatus};
use padam::{Error, HyperParamOverrides, Optimizer, OptimizerState, PSchedule, StepDecaySchedule, Tensor};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ShapeMismatch = 3,
    NonFinite = 4,
    InvalidHyperparameter = 5,
    UnknownOptimizer = 6,
    InvalidArgument = 7,
    Config = 8,
    Diverged = 9,
    Io = 10,
    Panic = 11,
}

impl From<&Error> for PadamStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidShape { .. } | Error::ShapeMismatch { .. } => PadamStatus::ShapeMismatch,
            Error::NonFiniteInput { .. } => PadamStatus::NonFinite,
            Error::InvalidHyperparameter(_) => PadamStatus::InvalidHyperparameter,
            Error::UnknownOptimizer { .. } => PadamStatus::UnknownOptimizer,
            Error::InvalidArgument(_) | Error::Domain(_) | Error::InvalidLabel { .. } => PadamStatus::InvalidArgument,
            Error::Config(_) | Error::Json(_) => PadamStatus::Config,
            Error::Diverged { .. } => PadamStatus::Diverged,
            Error::Io(_) | Error::Parse { .. } | Error::Csv(_) => PadamStatus::Io,
        }
    }
}

/// Hyperparameters as resolved for an optimizer handle.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PadamHyperParams {
    pub alpha0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub p: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub momentum: f64,
}

/// Opaque optimizer: an update rule plus resolved hyperparameters.
pub struct PadamOptimizer {
    inner: Optimizer,
}

/// Opaque per-buffer optimizer state (moments or velocity, and step count).
pub struct PadamState {
    len: usize,
    inner: OptimizerState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(PadamStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(PadamStatus::from(&e), e.to_string())
    }
}

fn fail(status: PadamStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording errors and turning panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure> + UnwindSafe) -> PadamStatus {
    clear_last_error();
    match catch_unwind(f) {
        Ok(Ok(())) => PadamStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PadamStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(PadamStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(PadamStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn read_opt_str<'a>(s: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if s.is_null() {
        Ok(None)
    } else {
        read_str(s, what).map(Some)
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(PadamStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread, or null. Owned by the
/// library; valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn padam_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn padam_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn padam_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates an optimizer. `name` is one of `padam`, `adam`, `amsgrad`, `sgd`.
/// `overrides_json` may be null, or a JSON object with any of `alpha0`,
/// `beta1`, `beta2`, `p`, `epsilon`, `weight_decay`, `momentum`; unset fields
/// take the optimizer's presets.
#[no_mangle]
pub unsafe extern "C" fn padam_optimizer_new(
    name: *const c_char,
    overrides_json: *const c_char,
    out: *mut *mut PadamOptimizer,
) -> PadamStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let name = read_str(name, "name")?;
        let overrides: HyperParamOverrides = match read_opt_str(overrides_json, "overrides_json")? {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| fail(PadamStatus::Config, format!("overrides: {e}")))?,
            None => HyperParamOverrides::default(),
        };
        let inner = padam::make_optimizer(name, &overrides)?;
        *out = Box::into_raw(Box::new(PadamOptimizer { inner }));
        Ok(())
    })
}

/// Releases an optimizer. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn padam_optimizer_free(opt: *mut PadamOptimizer) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}

#[no_mangle]
pub unsafe extern "C" fn padam_optimizer_hyperparams(
    opt: *const PadamOptimizer,
    out: *mut PadamHyperParams,
) -> PadamStatus {
    guard(|| {
        non_null(opt, "opt")?;
        non_null(out, "out")?;
        let hp = (*opt).inner.hyper_params();
        *out = PadamHyperParams {
            alpha0: hp.alpha0,
            beta1: hp.beta1,
            beta2: hp.beta2,
            p: hp.p,
            epsilon: hp.epsilon,
            weight_decay: hp.weight_decay,
            momentum: hp.momentum,
        };
        Ok(())
    })
}

/// Exponent actually used in the denominator: `p` for Padam, 0.5 for Adam
/// and Amsgrad, 0 for SGD.
#[no_mangle]
pub unsafe extern "C" fn padam_optimizer_effective_p(opt: *const PadamOptimizer, out: *mut f64) -> PadamStatus {
    guard(|| {
        non_null(opt, "opt")?;
        non_null(out, "out")?;
        *out = (*opt).inner.effective_p();
        Ok(())
    })
}

/// Changes `p` in place, e.g. between epochs of a p schedule.
#[no_mangle]
pub unsafe extern "C" fn padam_optimizer_set_p(opt: *mut PadamOptimizer, p: f64) -> PadamStatus {
    guard(|| {
        non_null(opt, "opt")?;
        (*opt).inner = (*opt).inner.with_p(p)?;
        Ok(())
    })
}

/// Creates zeroed state for a flat buffer of `len` parameters.
#[no_mangle]
pub unsafe extern "C" fn padam_state_new(
    opt: *const PadamOptimizer,
    len: usize,
    out: *mut *mut PadamState,
) -> PadamStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(opt, "opt")?;
        let inner = (*opt).inner.init_state(&[len])?;
        *out = Box::into_raw(Box::new(PadamState { len, inner }));
        Ok(())
    })
}

/// Releases state. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn padam_state_free(state: *mut PadamState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of steps taken with this state.
#[no_mangle]
pub unsafe extern "C" fn padam_state_steps(state: *const PadamState, out: *mut u64) -> PadamStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(out, "out")?;
        *out = match &(*state).inner {
            OptimizerState::Moment(s) => s.t,
            OptimizerState::Sgd(s) => s.t,
        };
        Ok(())
    })
}

/// One update of `params[0..len]` in place, using `grads[0..len]` and step
/// size `lr`. On error neither `params` nor `state` is modified.
#[no_mangle]
pub unsafe extern "C" fn padam_step(
    opt: *const PadamOptimizer,
    state: *mut PadamState,
    params: *mut f64,
    grads: *const f64,
    len: usize,
    lr: f64,
) -> PadamStatus {
    guard(|| {
        non_null(opt, "opt")?;
        non_null(state, "state")?;
        let st = &mut *state;
        if st.len != len {
            return Err(fail(
                PadamStatus::ShapeMismatch,
                format!("state holds {} parameters, got {len}", st.len),
            ));
        }
        let theta = Tensor::vector(read_slice(params, len, "params")?.to_vec())?;
        let g = Tensor::vector(read_slice(grads, len, "grads")?.to_vec())?;
        let (next, next_state) = (*opt).inner.step(&theta, &g, &st.inner, lr)?;
        std::slice::from_raw_parts_mut(params, len).copy_from_slice(next.data());
        st.inner = next_state;
        Ok(())
    })
}

/// Step-decay learning rate at 0-based `epoch`.
#[no_mangle]
pub unsafe extern "C" fn padam_lr_at(
    base: f64,
    factor: f64,
    milestones: *const usize,
    n_milestones: usize,
    epoch: usize,
    out: *mut f64,
) -> PadamStatus {
    guard(|| {
        non_null(out, "out")?;
        let m = read_slice(milestones, n_milestones, "milestones")?.to_vec();
        *out = StepDecaySchedule::new(base, factor, m)?.lr_at(epoch);
        Ok(())
    })
}

/// `p` at 0-based `epoch` for a schedule given as JSON, e.g.
/// `{"mode": "step_decay", "p_start": 0.25, "p_end": 0.0625, "factor": 0.5, "milestones": [10, 20]}`.
#[no_mangle]
pub unsafe extern "C" fn padam_p_at(schedule_json: *const c_char, epoch: usize, out: *mut f64) -> PadamStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(schedule_json, "schedule_json")?;
        let s: PSchedule =
            serde_json::from_str(text).map_err(|e| fail(PadamStatus::Config, format!("p schedule: {e}")))?;
        s.validate()?;
        *out = s.p_at(epoch);
        Ok(())
    })
}

/// Runs one trial described by a JSON trial config (same format as the CLI's
/// `--config`). If `report_out` is non-null it receives a JSON report with
/// `run_id`, `run_dir`, `metrics_path`, `status` and `rows`, also on
/// divergence, in which case the status is `PADAM_STATUS_DIVERGED`.
#[no_mangle]
pub unsafe extern "C" fn padam_run_trial_json(config_json: *const c_char, report_out: *mut *mut c_char) -> PadamStatus {
    guard(|| {
        if !report_out.is_null() {
            *report_out = ptr::null_mut();
        }
        let text = read_str(config_json, "config_json")?;
        let config: TrialConfig =
            serde_json::from_str(text).map_err(|e| fail(PadamStatus::Config, format!("trial config: {e}")))?;
        let report = execute_trial(&config)?;
        if !report_out.is_null() {
            let json = serde_json::json!({
                "run_id": report.run_id,
                "run_dir": report.run_dir,
                "metrics_path": report.metrics_path,
                "status": report.status,
                "rows": report.rows,
            });
            *report_out = into_c_string(json.to_string());
        }
        match report.status {
            TrialStatus::Completed => Ok(()),
            TrialStatus::Diverged { epoch, batch } => Err(Error::Diverged { epoch, batch }.into()),
        }
    })
}
