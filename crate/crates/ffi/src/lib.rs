//! C ABI over the mvgame engine.
//!
//! Conventions: every object crosses the boundary as an opaque pointer with
//! a matching `_free` function; fallible calls return an [`MvgStatus`] and
//! write results through out-pointers; the last error message is kept in
//! thread-local storage and readable via [`mvg_last_error`]. Passing a null
//! required pointer is reported, never dereferenced.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::sync::Arc;

use mvgame::artifacts::{load_or_build_tables, ArtifactError, TableSet};
use mvgame::config::ScenarioConfig;
use mvgame::equilibrium::{strategy_value, StateView, StrategyKind};
use mvgame::game::{aggregate_losses, run_summaries, LossDistribution};
use mvgame::model::compute_coefficients;
use mvgame::verify::default_cache_dir;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvgStatus {
    /// Success.
    MvgOk = 0,
    /// A required pointer argument was null.
    MvgNullArgument = 1,
    /// The scenario configuration was rejected.
    MvgConfigError = 2,
    /// A numerical routine failed.
    MvgNumericalError = 3,
    /// A string argument was not valid UTF-8.
    MvgInvalidUtf8 = 4,
    /// An index argument was out of range.
    MvgOutOfRange = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: MvgStatus, message: &str) -> MvgStatus {
    set_error(message);
    status
}

fn config_status(err: &ArtifactError) -> MvgStatus {
    match err {
        ArtifactError::Config(_) => MvgStatus::MvgConfigError,
        _ => MvgStatus::MvgNumericalError,
    }
}

/// Opaque scenario handle: a validated configuration.
pub struct MvgScenario {
    config: ScenarioConfig,
}

/// Opaque handle over the Monte-Carlo c/∂ₚc tables.
pub struct MvgTables {
    set: TableSet,
}

/// Opaque handle over an aggregated simulation run.
pub struct MvgSummary {
    dist: LossDistribution,
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mvg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mvg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, MvgStatus> {
    if ptr.is_null() {
        return Err(MvgStatus::MvgNullArgument);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| MvgStatus::MvgInvalidUtf8)
}

/// Parses and validates a TOML scenario; on success stores a new handle in
/// `out` (release with [`mvg_scenario_free`]).
///
/// # Safety
/// `toml_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mvg_scenario_from_toml(
    toml_text: *const c_char,
    out: *mut *mut MvgScenario,
) -> MvgStatus {
    if out.is_null() {
        return fail(MvgStatus::MvgNullArgument, "out pointer is null");
    }
    let text = match str_arg(toml_text) {
        Ok(t) => t,
        Err(s) => return fail(s, "toml_text is null or not UTF-8"),
    };
    match ScenarioConfig::from_str(text).and_then(|c| c.validate().map(|_| c)) {
        Ok(config) => {
            *out = Box::into_raw(Box::new(MvgScenario { config }));
            MvgStatus::MvgOk
        }
        Err(e) => fail(MvgStatus::MvgConfigError, &e.to_string()),
    }
}

/// Overrides the scenario's seed.
///
/// # Safety
/// `scenario` must come from [`mvg_scenario_from_toml`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn mvg_scenario_set_seed(
    scenario: *mut MvgScenario,
    seed: u64,
) -> MvgStatus {
    match scenario.as_mut() {
        Some(s) => {
            s.config.simulation.seed = seed;
            MvgStatus::MvgOk
        }
        None => fail(MvgStatus::MvgNullArgument, "scenario is null"),
    }
}

/// Releases a scenario handle. Null is a no-op.
///
/// # Safety
/// `scenario` must be unfreed and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvg_scenario_free(scenario: *mut MvgScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Builds (or loads from the on-disk cache) the tables for the scenario's
/// market. `cache_dir` may be null for the default cache location.
///
/// # Safety
/// `scenario` must be a live handle, `out` a valid pointer, and `cache_dir`
/// null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mvg_tables_build(
    scenario: *const MvgScenario,
    cache_dir: *const c_char,
    out: *mut *mut MvgTables,
) -> MvgStatus {
    if out.is_null() {
        return fail(MvgStatus::MvgNullArgument, "out pointer is null");
    }
    let scenario = match scenario.as_ref() {
        Some(s) => s,
        None => return fail(MvgStatus::MvgNullArgument, "scenario is null"),
    };
    let cache = if cache_dir.is_null() {
        default_cache_dir()
    } else {
        match str_arg(cache_dir) {
            Ok(s) => PathBuf::from(s),
            Err(st) => return fail(st, "cache_dir is not UTF-8"),
        }
    };
    let config = &scenario.config;
    let investors = config.investors.build();
    let coeff = match compute_coefficients(&investors) {
        Ok(c) => c,
        Err(e) => return fail(MvgStatus::MvgConfigError, &e.to_string()),
    };
    match load_or_build_tables(
        &config.market,
        &investors,
        &coeff.kappa,
        &config.tables,
        config.simulation.clamp_eps,
        &cache,
    ) {
        Ok(set) => {
            *out = Box::into_raw(Box::new(MvgTables { set }));
            MvgStatus::MvgOk
        }
        Err(e) => fail(config_status(&e), &e.to_string()),
    }
}

/// Releases a tables handle. Null is a no-op.
///
/// # Safety
/// `tables` must be unfreed and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvg_tables_free(tables: *mut MvgTables) {
    if !tables.is_null() {
        drop(Box::from_raw(tables));
    }
}

/// Evaluates investor `i`'s configured strategy at (t, p) and writes the
/// dollar position to `out`. `tables` may be null unless the scenario's
/// strategy needs the ∂ₚc correction.
///
/// # Safety
/// Handles must be live (or null where allowed) and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mvg_strategy_value(
    scenario: *const MvgScenario,
    tables: *const MvgTables,
    investor: usize,
    t: f64,
    p: f64,
    out: *mut f64,
) -> MvgStatus {
    if out.is_null() {
        return fail(MvgStatus::MvgNullArgument, "out pointer is null");
    }
    let scenario = match scenario.as_ref() {
        Some(s) => s,
        None => return fail(MvgStatus::MvgNullArgument, "scenario is null"),
    };
    let config = &scenario.config;
    let investors = config.investors.build();
    if investor >= investors.len() {
        return fail(
            MvgStatus::MvgOutOfRange,
            &format!("investor {investor} out of range (N = {})", investors.len()),
        );
    }
    let coeff = match compute_coefficients(&investors) {
        Ok(c) => c,
        Err(e) => return fail(MvgStatus::MvgConfigError, &e.to_string()),
    };
    let kind = match config.strategy_kind() {
        Ok(k) => k,
        Err(e) => return fail(MvgStatus::MvgConfigError, &e.to_string()),
    };
    let state = match kind {
        StrategyKind::PartialInfo | StrategyKind::PartialInfoFirstTermOnly => {
            StateView::Posterior(p)
        }
        StrategyKind::FullInfoMarkov => StateView::Regime(if p >= 0.5 { 1 } else { 2 }),
        _ => StateView::None,
    };
    let dc = tables.as_ref().map(|t| &t.set.base.dc);
    match strategy_value(kind, &config.market, &coeff, &investors[investor], investor, t, state, dc)
    {
        Ok(v) => {
            *out = v;
            MvgStatus::MvgOk
        }
        Err(e) => fail(MvgStatus::MvgNumericalError, &e.to_string()),
    }
}

/// Runs all configured realizations and stores an aggregated summary handle
/// in `out`. `tables` may be null unless the strategy needs them.
///
/// # Safety
/// Handles must be live (or null where allowed) and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mvg_simulate(
    scenario: *const MvgScenario,
    tables: *const MvgTables,
    out: *mut *mut MvgSummary,
) -> MvgStatus {
    if out.is_null() {
        return fail(MvgStatus::MvgNullArgument, "out pointer is null");
    }
    let scenario = match scenario.as_ref() {
        Some(s) => s,
        None => return fail(MvgStatus::MvgNullArgument, "scenario is null"),
    };
    let config = &scenario.config;
    let dc = tables.as_ref().map(|t| Arc::new(t.set.base.dc.clone()));
    let setup = match config.to_setup(dc) {
        Ok(s) => s,
        Err(e) => return fail(MvgStatus::MvgConfigError, &e.to_string()),
    };
    let n = setup.investors.len();
    match run_summaries(&setup, config.simulation.realizations) {
        Ok(summaries) => {
            let dist = aggregate_losses(&summaries, n);
            *out = Box::into_raw(Box::new(MvgSummary { dist }));
            MvgStatus::MvgOk
        }
        Err(e) => fail(MvgStatus::MvgNumericalError, &e.to_string()),
    }
}

/// Releases a summary handle. Null is a no-op.
///
/// # Safety
/// `summary` must be unfreed and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvg_summary_free(summary: *mut MvgSummary) {
    if !summary.is_null() {
        drop(Box::from_raw(summary));
    }
}

/// Probability that every investor defaults.
///
/// # Safety
/// `summary` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mvg_summary_all_default_probability(
    summary: *const MvgSummary,
    out: *mut f64,
) -> MvgStatus {
    summary_stat(summary, out, |d| d.all_default_probability())
}

/// Probability that at least one investor defaults.
///
/// # Safety
/// `summary` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mvg_summary_any_default_probability(
    summary: *const MvgSummary,
    out: *mut f64,
) -> MvgStatus {
    summary_stat(summary, out, |d| d.any_default_probability())
}

unsafe fn summary_stat(
    summary: *const MvgSummary,
    out: *mut f64,
    stat: impl Fn(&LossDistribution) -> f64,
) -> MvgStatus {
    if out.is_null() {
        return fail(MvgStatus::MvgNullArgument, "out pointer is null");
    }
    match summary.as_ref() {
        Some(s) => {
            *out = stat(&s.dist);
            MvgStatus::MvgOk
        }
        None => fail(MvgStatus::MvgNullArgument, "summary is null"),
    }
}

/// Copies the default-count histogram (index k = realizations with exactly
/// k defaults, length N+1) into `buf`, writing at most `len` entries;
/// `written` receives the full histogram length.
///
/// # Safety
/// `summary` must be live; `buf` must point to `len` writable entries;
/// `written` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mvg_summary_histogram(
    summary: *const MvgSummary,
    buf: *mut usize,
    len: usize,
    written: *mut usize,
) -> MvgStatus {
    if written.is_null() || (buf.is_null() && len > 0) {
        return fail(MvgStatus::MvgNullArgument, "buffer or length pointer is null");
    }
    match summary.as_ref() {
        Some(s) => {
            let hist = &s.dist.histogram;
            let n = hist.len().min(len);
            for (k, &count) in hist.iter().take(n).enumerate() {
                *buf.add(k) = count;
            }
            *written = hist.len();
            MvgStatus::MvgOk
        }
        None => fail(MvgStatus::MvgNullArgument, "summary is null"),
    }
}
