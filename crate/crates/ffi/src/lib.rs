//! C interface to `xtalk-core`.
//!
//! Every fallible function returns an [`XtalkStatus`]; on failure the
//! message is available from [`xtalk_last_error_message`] on the same
//! thread. Panics never cross the boundary. Strings returned to the caller
//! must be released with [`xtalk_string_free`], experiments with
//! [`xtalk_experiment_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use xtalk_core::circuit::{Circuit, Scheme};
use xtalk_core::config::{Experiment, ExperimentConfig};
use xtalk_core::crosstalk::{bell_fidelity_analytic, spectator_population_analytic};
use xtalk_core::drift::phase_scan;
use xtalk_core::error::Error;
use xtalk_core::recipes::{envelope_series, envelope_summary, run_recipe, Recipe};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XtalkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidInput = 4,
    NonClosedPulse = 5,
    OptimizationFailure = 6,
    Truncation = 7,
    Io = 8,
    BufferTooSmall = 9,
    ChecksFailed = 10,
    Panic = 99,
}

/// Opaque handle to a resolved experiment configuration.
pub struct XtalkExperiment {
    inner: Experiment,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("no interior nul"));
}

fn status_of(err: &Error) -> XtalkStatus {
    match err {
        Error::Config(_) | Error::Json(_) => XtalkStatus::Config,
        Error::NonClosedPulse { .. } => XtalkStatus::NonClosedPulse,
        Error::OptimizationFailure { .. } => XtalkStatus::OptimizationFailure,
        Error::Truncation { .. } => XtalkStatus::Truncation,
        Error::Io(_) => XtalkStatus::Io,
        _ => XtalkStatus::InvalidInput,
    }
}

struct Fail(XtalkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> XtalkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            XtalkStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            XtalkStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(XtalkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(XtalkStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn exp_arg<'a>(p: *const XtalkExperiment) -> Result<&'a Experiment, Fail> {
    p.as_ref()
        .map(|e| &e.inner)
        .ok_or_else(|| Fail(XtalkStatus::NullPointer, "experiment is null".into()))
}

fn null(what: &str) -> Fail {
    Fail(XtalkStatus::NullPointer, format!("{what} is null"))
}

fn into_handle(cfg: ExperimentConfig, out: *mut *mut XtalkExperiment) -> Result<(), Fail> {
    let inner = Experiment::from_config(cfg)?;
    unsafe { *out = Box::into_raw(Box::new(XtalkExperiment { inner })) };
    Ok(())
}

/// Message of the last failure on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn xtalk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn xtalk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an experiment from a JSON configuration.
///
/// # Safety
/// `json` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn xtalk_experiment_from_json(json: *const c_char, out: *mut *mut XtalkExperiment) -> XtalkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::from_json(str_arg(json, "json")?)?;
        into_handle(cfg, out)
    })
}

/// Builds an experiment from a named preset (`tableI` or `tableII`),
/// followed by `n_overrides` `key.path=value` strings.
///
/// # Safety
/// `name` must be a valid C string, `overrides` an array of `n_overrides`
/// valid C strings (or null when zero), and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn xtalk_experiment_from_preset(
    name: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut XtalkExperiment,
) -> XtalkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut cfg = ExperimentConfig::preset(str_arg(name, "name")?)?;
        if n_overrides > 0 {
            if overrides.is_null() {
                return Err(null("overrides"));
            }
            let items = std::slice::from_raw_parts(overrides, n_overrides)
                .iter()
                .map(|&p| str_arg(p, "override"))
                .collect::<Result<Vec<_>, _>>()?;
            cfg = cfg.with_overrides(&items)?;
        }
        into_handle(cfg, out)
    })
}

/// Releases an experiment. Null is ignored.
///
/// # Safety
/// `exp` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn xtalk_experiment_free(exp: *mut XtalkExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Number of ions in the experiment's chain, or 0 for null.
///
/// # Safety
/// `exp` must be null or a live experiment.
#[no_mangle]
pub unsafe extern "C" fn xtalk_experiment_n_ions(exp: *const XtalkExperiment) -> usize {
    exp.as_ref().map_or(0, |e| e.inner.map.n_ions())
}

/// Resolved configuration as JSON.
///
/// # Safety
/// `exp` must be a live experiment and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn xtalk_experiment_config_json(exp: *const XtalkExperiment, out: *mut *mut c_char) -> XtalkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let e = exp_arg(exp)?;
        *out = to_c_string(e.config.to_json())?;
        Ok(())
    })
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(XtalkStatus::InvalidInput, "string contains nul".into()))
}

/// Fixed-phase sweep of `scheme` at `n_gates` gates. Writes
/// `n_phis × n_ions` populations (row per phase) to `populations` and, if
/// `fidelity` is non-null, `n_phis` target fidelities.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn xtalk_phase_scan(
    exp: *const XtalkExperiment,
    scheme: *const c_char,
    n_gates: usize,
    phis: *const f64,
    n_phis: usize,
    populations: *mut f64,
    populations_len: usize,
    fidelity: *mut f64,
) -> XtalkStatus {
    guard(|| {
        let e = exp_arg(exp)?;
        let scheme: Scheme = str_arg(scheme, "scheme")?.parse()?;
        if n_phis > 0 && phis.is_null() {
            return Err(null("phis"));
        }
        let n = e.map.n_ions();
        if populations.is_null() {
            return Err(null("populations"));
        }
        if populations_len < n_phis * n {
            return Err(Fail(
                XtalkStatus::BufferTooSmall,
                format!("populations needs {} values, got {populations_len}", n_phis * n),
            ));
        }
        let phi_values = if n_phis == 0 { &[][..] } else { std::slice::from_raw_parts(phis, n_phis) };
        let circuit = e.build(scheme, n_gates)?;
        let scan = phase_scan(&circuit, &e.model, phi_values, 0.0)?;
        let pops = std::slice::from_raw_parts_mut(populations, n_phis * n);
        for (row, p) in pops.chunks_mut(n.max(1)).zip(&scan.populations) {
            row.copy_from_slice(p);
        }
        if !fidelity.is_null() {
            std::slice::from_raw_parts_mut(fidelity, n_phis).copy_from_slice(&scan.target_fidelity);
        }
        Ok(())
    })
}

/// Envelope summary (per scheme min/max/mean and fit) as JSON.
///
/// # Safety
/// `exp` must be a live experiment and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn xtalk_envelope_json(exp: *const XtalkExperiment, out: *mut *mut c_char) -> XtalkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let e = exp_arg(exp)?;
        let all = envelope_series(e)?;
        let value = envelope_summary(e, &all)?;
        *out = to_c_string(serde_json::to_string_pretty(&value).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Runs a named recipe (`phase-scan`, `envelope`, `fm-optimize`, `verify`,
/// `simulate`) into `out_dir`. `circuit_path` is read by `simulate` and
/// may be null otherwise. `*passed` (if non-null) receives 1 when the
/// recipe's checks pass; a failed check also returns `ChecksFailed`.
///
/// # Safety
/// String arguments must be valid C strings; `passed` may be null.
#[no_mangle]
pub unsafe extern "C" fn xtalk_run_recipe(
    exp: *const XtalkExperiment,
    recipe: *const c_char,
    out_dir: *const c_char,
    circuit_path: *const c_char,
    passed: *mut c_int,
) -> XtalkStatus {
    guard(|| {
        let e = exp_arg(exp)?;
        let recipe: Recipe = str_arg(recipe, "recipe")?.parse()?;
        let dir = str_arg(out_dir, "out_dir")?;
        let circuit = if circuit_path.is_null() {
            None
        } else {
            Some(Circuit::load(Path::new(str_arg(circuit_path, "circuit_path")?))?)
        };
        let outcome = run_recipe(recipe, e, Path::new(dir), circuit.as_ref())?;
        if !passed.is_null() {
            *passed = c_int::from(outcome.passed);
        }
        if outcome.passed {
            Ok(())
        } else {
            Err(Fail(XtalkStatus::ChecksFailed, outcome.summary))
        }
    })
}

/// `¼(1 + cos θ₁)(1 + cos θ₂)`
#[no_mangle]
pub extern "C" fn xtalk_bell_fidelity_analytic(theta1: f64, theta2: f64) -> f64 {
    bell_fidelity_analytic(theta1, theta2)
}

/// `½(1 − cos θ₁ cos θ₂)`
#[no_mangle]
pub extern "C" fn xtalk_spectator_population_analytic(theta1: f64, theta2: f64) -> f64 {
    spectator_population_analytic(theta1, theta2)
}

/// Gate angles of one calibrated MS gate of angle `theta` at `phi_beam`.
/// Layout: `[θ, (ion, θ₁, θ₂, φ) per spectator term]`; `*len` receives the
/// number of values needed, also when the buffer is too small.
///
/// # Safety
/// `out` must be valid for `cap` values and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn xtalk_crosstalk_angles(
    exp: *const XtalkExperiment,
    theta: f64,
    phi_beam: f64,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> XtalkStatus {
    guard(|| {
        let e = exp_arg(exp)?;
        if len.is_null() {
            return Err(null("len"));
        }
        let angles = e.model.physics.calibrated(&e.map, theta, phi_beam)?;
        let mut values = vec![angles.theta];
        for t in &angles.spectator_terms {
            values.extend([t.ion as f64, t.theta1, t.theta2, t.phi]);
        }
        *len = values.len();
        if cap < values.len() {
            return Err(Fail(
                XtalkStatus::BufferTooSmall,
                format!("need {} values, buffer holds {cap}", values.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, values.len()).copy_from_slice(&values);
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn xtalk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
