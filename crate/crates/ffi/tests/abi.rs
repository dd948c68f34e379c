use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use xtalk_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(xtalk_last_error_message()) }.to_string_lossy().into_owned()
}

fn preset(name: &str, overrides: &[&str]) -> *mut XtalkExperiment {
    let name = CString::new(name).unwrap();
    let owned: Vec<CString> = overrides.iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|s| s.as_ptr()).collect();
    let mut exp = ptr::null_mut();
    let status = unsafe { xtalk_experiment_from_preset(name.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut exp) };
    assert_eq!(status, XtalkStatus::Ok, "{}", last_error());
    exp
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(xtalk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn analytic_forms() {
    assert!((xtalk_bell_fidelity_analytic(std::f64::consts::FRAC_PI_2, 0.0) - 0.5).abs() < 1e-15);
    assert!((xtalk_spectator_population_analytic(std::f64::consts::FRAC_PI_2, 0.0) - 0.5).abs() < 1e-15);
    assert_eq!(xtalk_bell_fidelity_analytic(0.0, 0.0), 1.0);
}

#[test]
fn null_arguments_are_reported() {
    let mut exp = ptr::null_mut();
    let status = unsafe { xtalk_experiment_from_json(ptr::null(), &mut exp) };
    assert_eq!(status, XtalkStatus::NullPointer);
    assert!(exp.is_null());
    assert!(last_error().contains("json"));
    assert_eq!(unsafe { xtalk_experiment_n_ions(ptr::null()) }, 0);
    unsafe { xtalk_experiment_free(ptr::null_mut()) };
    unsafe { xtalk_string_free(ptr::null_mut()) };
}

#[test]
fn bad_config_is_a_config_error() {
    let json = CString::new(r#"{"no_such_field": 1}"#).unwrap();
    let mut exp = ptr::null_mut();
    let status = unsafe { xtalk_experiment_from_json(json.as_ptr(), &mut exp) };
    assert_eq!(status, XtalkStatus::Config);
    assert!(exp.is_null());
    assert!(!last_error().is_empty());

    let name = CString::new("tableIII").unwrap();
    let status = unsafe { xtalk_experiment_from_preset(name.as_ptr(), ptr::null(), 0, &mut exp) };
    assert_eq!(status, XtalkStatus::Config);
}

#[test]
fn config_round_trips_through_json() {
    let exp = preset("tableI", &["trials=3"]);
    assert_eq!(unsafe { xtalk_experiment_n_ions(exp) }, 5);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { xtalk_experiment_config_json(exp, &mut text) }, XtalkStatus::Ok);
    let json = unsafe { CStr::from_ptr(text) }.to_owned();
    unsafe { xtalk_string_free(text) };
    let value: serde_json::Value = serde_json::from_str(json.to_str().unwrap()).unwrap();
    assert_eq!(value["trials"], 3);

    let mut again = ptr::null_mut();
    assert_eq!(unsafe { xtalk_experiment_from_json(json.as_ptr(), &mut again) }, XtalkStatus::Ok);
    unsafe {
        xtalk_experiment_free(again);
        xtalk_experiment_free(exp);
    }
}

#[test]
fn phase_scan_fills_buffers() {
    let exp = preset("tableI", &[]);
    let scheme = CString::new("none").unwrap();
    let phis = [0.0, 1.0, 2.0];
    let mut pops = vec![f64::NAN; 15];
    let mut fid = vec![f64::NAN; 3];
    let status = unsafe {
        xtalk_phase_scan(exp, scheme.as_ptr(), 21, phis.as_ptr(), 3, pops.as_mut_ptr(), pops.len(), fid.as_mut_ptr())
    };
    assert_eq!(status, XtalkStatus::Ok, "{}", last_error());
    assert!(pops.iter().all(|p| (0.0..=1.0).contains(p)));
    assert!(fid.iter().all(|f| (0.0..=1.0).contains(f)));
    assert!(pops.iter().any(|&p| p > 1e-3));

    let mut small = vec![0.0; 14];
    let status = unsafe {
        xtalk_phase_scan(exp, scheme.as_ptr(), 21, phis.as_ptr(), 3, small.as_mut_ptr(), small.len(), ptr::null_mut())
    };
    assert_eq!(status, XtalkStatus::BufferTooSmall);

    let bad = CString::new("sideways").unwrap();
    let status = unsafe {
        xtalk_phase_scan(exp, bad.as_ptr(), 21, phis.as_ptr(), 3, pops.as_mut_ptr(), pops.len(), ptr::null_mut())
    };
    assert_ne!(status, XtalkStatus::Ok);
    unsafe { xtalk_experiment_free(exp) };
}

#[test]
fn crosstalk_angles_report_needed_length() {
    let exp = preset("tableI", &[]);
    let mut len = 0usize;
    let status = unsafe { xtalk_crosstalk_angles(exp, 0.3, 0.0, ptr::null_mut(), 0, &mut len) };
    assert_eq!(status, XtalkStatus::BufferTooSmall);
    assert_eq!((len - 1) % 4, 0);
    assert!(len > 1);
    let mut buf = vec![0.0; len];
    let status = unsafe { xtalk_crosstalk_angles(exp, 0.3, 0.0, buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(status, XtalkStatus::Ok);
    assert!((buf[0] - 0.3).abs() < 1e-12);
    unsafe { xtalk_experiment_free(exp) };
}

#[test]
fn envelope_json_and_recipe() {
    let exp = preset("tableI", &["trials=2", "gate_counts=[1,3]", "drift.sequences_per_trial=2"]);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { xtalk_envelope_json(exp, &mut text) }, XtalkStatus::Ok, "{}", last_error());
    let json = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    unsafe { xtalk_string_free(text) };
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["gate_counts"], serde_json::json!([1, 3]));

    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let recipe = CString::new("phase-scan").unwrap();
    let mut passed: c_int = -1;
    let status = unsafe { xtalk_run_recipe(exp, recipe.as_ptr(), out.as_ptr(), ptr::null(), &mut passed) };
    assert_eq!(status, XtalkStatus::Ok, "{}", last_error());
    assert_eq!(passed, 1);
    assert!(dir.path().join("phase_scan.csv").exists());
    assert!(dir.path().join("manifest.json").exists());

    let recipe = CString::new("bake").unwrap();
    let status = unsafe { xtalk_run_recipe(exp, recipe.as_ptr(), out.as_ptr(), ptr::null(), &mut passed) };
    assert_ne!(status, XtalkStatus::Ok);
    unsafe { xtalk_experiment_free(exp) };
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/xtalk.h")).unwrap();
    for name in [
        "xtalk_last_error_message",
        "xtalk_version",
        "xtalk_experiment_from_json",
        "xtalk_experiment_from_preset",
        "xtalk_experiment_free",
        "xtalk_experiment_n_ions",
        "xtalk_experiment_config_json",
        "xtalk_phase_scan",
        "xtalk_envelope_json",
        "xtalk_run_recipe",
        "xtalk_bell_fidelity_analytic",
        "xtalk_spectator_population_analytic",
        "xtalk_crosstalk_angles",
        "xtalk_string_free",
        "XTALK_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
