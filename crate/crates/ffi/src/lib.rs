//! C ABI over `irsopt`.
//!
//! Objects are opaque heap handles created by `*_new`/`*_from_*` functions
//! and released with the matching `*_free`. Every fallible function returns
//! an [`IrsoptStatus`]; on failure a message is stored per thread and can be
//! read with [`irsopt_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use irsopt::config::{default_scenario, tiny_scenario};
use irsopt::power::optimal_power;
use irsopt::queueing::slot_weight;
use irsopt::simulator::run_episode;
use irsopt::{ControllerKind, Error, RunMetrics, ScenarioConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    Panic = 5,
}

/// Validated scenario.
pub struct IrsoptScenario {
    inner: ScenarioConfig,
}

/// Metrics of one simulated episode.
pub struct IrsoptRun {
    inner: RunMetrics,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(status: IrsoptStatus, msg: impl Into<String>) -> IrsoptStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> IrsoptStatus {
    let status = if e.is_usage() {
        IrsoptStatus::Config
    } else {
        IrsoptStatus::Runtime
    };
    fail(status, e.to_string())
}

fn guard(body: impl FnOnce() -> IrsoptStatus) -> IrsoptStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => {
            if s == IrsoptStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(IrsoptStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, IrsoptStatus> {
    if s.is_null() {
        return Err(fail(IrsoptStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(IrsoptStatus::InvalidArgument, "string is not UTF-8"))
}

fn emit<T>(out: *mut *mut T, value: T) -> IrsoptStatus {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    IrsoptStatus::Ok
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn irsopt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn irsopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in scenario: `name` is `default` or `tiny`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn irsopt_scenario_builtin(
    name: *const c_char,
    out: *mut *mut IrsoptScenario,
) -> IrsoptStatus {
    guard(|| {
        if out.is_null() {
            return fail(IrsoptStatus::NullPointer, "out is null");
        }
        let name = match read_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let inner = match name {
            "default" => default_scenario(),
            "tiny" => tiny_scenario(),
            other => {
                return fail(
                    IrsoptStatus::InvalidArgument,
                    format!("unknown scenario `{other}`"),
                )
            }
        };
        emit(out, IrsoptScenario { inner })
    })
}

/// Scenario parsed from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn irsopt_scenario_from_toml(
    toml: *const c_char,
    out: *mut *mut IrsoptScenario,
) -> IrsoptStatus {
    guard(|| {
        if out.is_null() {
            return fail(IrsoptStatus::NullPointer, "out is null");
        }
        let text = match read_str(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::from_toml_str(text, &[]) {
            Ok(inner) => emit(out, IrsoptScenario { inner }),
            Err(e) => from_error(e),
        }
    })
}

/// Applies one dotted `key=value` override in place. On error the scenario
/// is unchanged.
///
/// # Safety
/// `scenario` must come from this library; `assignment` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn irsopt_scenario_set(
    scenario: *mut IrsoptScenario,
    assignment: *const c_char,
) -> IrsoptStatus {
    guard(|| {
        let Some(s) = scenario.as_mut() else {
            return fail(IrsoptStatus::NullPointer, "scenario is null");
        };
        let kv = match read_str(assignment) {
            Ok(t) => t.to_string(),
            Err(st) => return st,
        };
        match ScenarioConfig::from_toml_str(&s.inner.to_toml_string(), &[kv]) {
            Ok(cfg) => {
                s.inner = cfg;
                IrsoptStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of reflecting elements `M * N`.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn irsopt_scenario_total_elements(
    scenario: *const IrsoptScenario,
    out: *mut usize,
) -> IrsoptStatus {
    guard(|| match (scenario.as_ref(), out.is_null()) {
        (Some(s), false) => {
            *out = s.inner.total_elements();
            IrsoptStatus::Ok
        }
        _ => fail(IrsoptStatus::NullPointer, "null argument"),
    })
}

/// # Safety
/// `scenario` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn irsopt_scenario_free(scenario: *mut IrsoptScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Closed-form transmit power (W) of one device for fixed phases.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn irsopt_optimal_power(
    scenario: *const IrsoptScenario,
    weight: f64,
    queue_bits: f64,
    arrival_bits: f64,
    gain: f64,
    out: *mut f64,
) -> IrsoptStatus {
    guard(|| {
        let (Some(s), false) = (scenario.as_ref(), out.is_null()) else {
            return fail(IrsoptStatus::NullPointer, "null argument");
        };
        let args = [weight, queue_bits, arrival_bits, gain];
        if args.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return fail(
                IrsoptStatus::InvalidArgument,
                "arguments must be finite and non-negative",
            );
        }
        *out = optimal_power(weight, queue_bits, arrival_bits, gain, &s.inner);
        IrsoptStatus::Ok
    })
}

/// Per-slot drift weight of one device.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn irsopt_slot_weight(
    queue_bits: f64,
    arrival_bits: f64,
    virtual_queue_s: f64,
    avg_arrival_bits: f64,
    slot_duration_s: f64,
    out: *mut f64,
) -> IrsoptStatus {
    guard(|| {
        if out.is_null() {
            return fail(IrsoptStatus::NullPointer, "out is null");
        }
        match slot_weight(
            queue_bits,
            arrival_bits,
            virtual_queue_s,
            avg_arrival_bits,
            slot_duration_s,
        ) {
            Some(w) => {
                *out = w;
                IrsoptStatus::Ok
            }
            None => fail(
                IrsoptStatus::InvalidArgument,
                "average arrival must be positive",
            ),
        }
    })
}

/// Simulates one episode. `controller` is `proposed`, `random_phase`,
/// `without_irs` or `exhaustive`.
///
/// # Safety
/// `scenario` must come from this library; `controller` must be a
/// NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn irsopt_run_episode(
    scenario: *const IrsoptScenario,
    controller: *const c_char,
    seed: u64,
    out: *mut *mut IrsoptRun,
) -> IrsoptStatus {
    guard(|| {
        let (Some(s), false) = (scenario.as_ref(), out.is_null()) else {
            return fail(IrsoptStatus::NullPointer, "null argument");
        };
        let kind: ControllerKind = match read_str(controller).map(str::parse) {
            Ok(Ok(k)) => k,
            Ok(Err(e)) => return from_error(e),
            Err(st) => return st,
        };
        match run_episode(&s.inner, kind, seed) {
            Ok(inner) => emit(out, IrsoptRun { inner }),
            Err(e) => from_error(e),
        }
    })
}

/// Number of simulated slots.
///
/// # Safety
/// `run` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn irsopt_run_horizon(
    run: *const IrsoptRun,
    out: *mut usize,
) -> IrsoptStatus {
    guard(|| match (run.as_ref(), out.is_null()) {
        (Some(r), false) => {
            *out = r.inner.horizon();
            IrsoptStatus::Ok
        }
        _ => fail(IrsoptStatus::NullPointer, "null argument"),
    })
}

/// Post-burn-in averages: total power (W), virtual queue (s), delay (s).
/// Any output pointer may be null to skip it.
///
/// # Safety
/// `run` must come from this library; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn irsopt_run_averages(
    run: *const IrsoptRun,
    mean_power_w: *mut f64,
    mean_virtual_queue_s: *mut f64,
    mean_delay_s: *mut f64,
) -> IrsoptStatus {
    guard(|| {
        let Some(r) = run.as_ref() else {
            return fail(IrsoptStatus::NullPointer, "run is null");
        };
        let m = &r.inner;
        for (ptr, value) in [
            (mean_power_w, m.mean_total_power()),
            (mean_virtual_queue_s, m.mean_virtual_queue()),
            (mean_delay_s, m.mean_delay()),
        ] {
            if let Some(slot) = ptr.as_mut() {
                *slot = value;
            }
        }
        IrsoptStatus::Ok
    })
}

/// Copies the per-slot total power (W) into `buffer`. `len` must be at
/// least the horizon.
///
/// # Safety
/// `run` must come from this library; `buffer` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn irsopt_run_total_power(
    run: *const IrsoptRun,
    buffer: *mut f64,
    len: usize,
) -> IrsoptStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), buffer.is_null()) else {
            return fail(IrsoptStatus::NullPointer, "null argument");
        };
        let src = &r.inner.total_power;
        if len < src.len() {
            return fail(
                IrsoptStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", src.len()),
            );
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buffer, src.len());
        IrsoptStatus::Ok
    })
}

/// # Safety
/// `run` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn irsopt_run_free(run: *mut IrsoptRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
