//! Exercises the C ABI the way a foreign caller would: through the
//! `extern "C"` symbols with raw pointers, checking status codes, the
//! thread-local error message, and handle lifecycles.

use std::ffi::{CStr, CString};
use std::ptr;

use mvgame_ffi::*;

const TINY_CONFIG: &str = r#"
[market]
r = 0.05
sigma = 0.1
mu1 = 0.2
mu2 = 0.02
q1 = 10.0
q2 = 10.0
horizon = 10.0
drift_mode = { kind = "constant_unknown", high = true }

[investors]
count = 10
gamma0 = 8.0
gamma_step = 0.1
lambda_m = 0.5
lambda_v = 0.5

[strategy]
information = "full"

[simulation]
realizations = 5
n_steps = 50
seed = 7
"#;

fn c(text: &str) -> CString {
    CString::new(text).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(mvg_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn version_is_nonempty_semverish() {
    let v = unsafe { CStr::from_ptr(mvg_version()) }.to_str().unwrap();
    assert!(!v.is_empty());
    assert!(v.split('.').count() >= 2, "unexpected version {v}");
}

#[test]
fn scenario_round_trip_and_seed_override() {
    let toml = c(TINY_CONFIG);
    let mut scenario: *mut MvgScenario = ptr::null_mut();
    let status = unsafe { mvg_scenario_from_toml(toml.as_ptr(), &mut scenario) };
    assert_eq!(status, MvgStatus::MvgOk);
    assert!(!scenario.is_null());
    assert_eq!(unsafe { mvg_scenario_set_seed(scenario, 99) }, MvgStatus::MvgOk);
    unsafe { mvg_scenario_free(scenario) };
}

#[test]
fn null_and_utf8_error_paths() {
    let mut scenario: *mut MvgScenario = ptr::null_mut();
    // Null text.
    let status = unsafe { mvg_scenario_from_toml(ptr::null(), &mut scenario) };
    assert_eq!(status, MvgStatus::MvgNullArgument);
    assert!(!last_error().is_empty());
    // Null out pointer.
    let toml = c(TINY_CONFIG);
    let status = unsafe { mvg_scenario_from_toml(toml.as_ptr(), ptr::null_mut()) };
    assert_eq!(status, MvgStatus::MvgNullArgument);
    // Invalid UTF-8.
    let bad = [0xffu8, 0xfe, 0x00];
    let status =
        unsafe { mvg_scenario_from_toml(bad.as_ptr() as *const _, &mut scenario) };
    assert_eq!(status, MvgStatus::MvgInvalidUtf8);
    // Rejected config carries a message.
    let broken = c("[market]\nr = \"not a number\"");
    let status = unsafe { mvg_scenario_from_toml(broken.as_ptr(), &mut scenario) };
    assert_eq!(status, MvgStatus::MvgConfigError);
    assert!(!last_error().is_empty());
    // Frees tolerate null.
    unsafe {
        mvg_scenario_free(ptr::null_mut());
        mvg_tables_free(ptr::null_mut());
        mvg_summary_free(ptr::null_mut());
    }
}

#[test]
fn strategy_value_checks_investor_range() {
    let toml = c(TINY_CONFIG);
    let mut scenario: *mut MvgScenario = ptr::null_mut();
    assert_eq!(
        unsafe { mvg_scenario_from_toml(toml.as_ptr(), &mut scenario) },
        MvgStatus::MvgOk
    );
    let mut value = f64::NAN;
    let status =
        unsafe { mvg_strategy_value(scenario, ptr::null(), 0, 0.0, 0.5, &mut value) };
    assert_eq!(status, MvgStatus::MvgOk);
    assert!(value.is_finite() && value > 0.0, "position {value}");
    let status =
        unsafe { mvg_strategy_value(scenario, ptr::null(), 10, 0.0, 0.5, &mut value) };
    assert_eq!(status, MvgStatus::MvgOutOfRange);
    unsafe { mvg_scenario_free(scenario) };
}

#[test]
fn simulate_and_histogram_copy() {
    let toml = c(TINY_CONFIG);
    let mut scenario: *mut MvgScenario = ptr::null_mut();
    assert_eq!(
        unsafe { mvg_scenario_from_toml(toml.as_ptr(), &mut scenario) },
        MvgStatus::MvgOk
    );
    let mut summary: *mut MvgSummary = ptr::null_mut();
    assert_eq!(
        unsafe { mvg_simulate(scenario, ptr::null(), &mut summary) },
        MvgStatus::MvgOk
    );
    assert!(!summary.is_null());

    let mut p_all = f64::NAN;
    let mut p_any = f64::NAN;
    unsafe {
        assert_eq!(
            mvg_summary_all_default_probability(summary, &mut p_all),
            MvgStatus::MvgOk
        );
        assert_eq!(
            mvg_summary_any_default_probability(summary, &mut p_any),
            MvgStatus::MvgOk
        );
    }
    assert!((0.0..=1.0).contains(&p_all));
    assert!((0.0..=1.0).contains(&p_any));
    assert!(p_any >= p_all);

    // Full histogram has N+1 = 11 bins summing to the realization count.
    let mut buf = [0usize; 16];
    let mut written = 0usize;
    let status = unsafe {
        mvg_summary_histogram(summary, buf.as_mut_ptr(), buf.len(), &mut written)
    };
    assert_eq!(status, MvgStatus::MvgOk);
    assert_eq!(written, 11);
    assert_eq!(buf[..11].iter().sum::<usize>(), 5);

    // A short buffer still reports the full length.
    let mut short = [0usize; 3];
    let mut written_short = 0usize;
    let status = unsafe {
        mvg_summary_histogram(summary, short.as_mut_ptr(), short.len(), &mut written_short)
    };
    assert_eq!(status, MvgStatus::MvgOk);
    assert_eq!(written_short, 11);
    assert_eq!(short, [buf[0], buf[1], buf[2]]);

    unsafe {
        mvg_summary_free(summary);
        mvg_scenario_free(scenario);
    }
}
