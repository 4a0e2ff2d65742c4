//! C ABI for the oblearn simulation and estimation toolkit.
//!
//! Conventions:
//!
//! * Handles (`OblearnConfig`, `OblearnPanel`) are opaque pointers created
//!   and destroyed by this library; the matching `*_free` function accepts
//!   null and must be called exactly once per handle.
//! * Every fallible function returns an [`OblearnStatus`]. Non-zero codes
//!   match the CLI exit codes: 2 configuration, 3 data, 4 numerical; code 1
//!   marks misuse of the interface itself (null pointer, non-UTF-8 text,
//!   out-of-range enum) and internal invariant failures.
//! * On failure a thread-local message is stored; fetch it with
//!   [`oblearn_last_error_message`]. The pointer stays valid until the next
//!   failing call on the same thread.
//! * Output structs are plain values; nothing they contain needs freeing.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use oblearn::classify::{rate_tables, ClassifyOptions, TieRule};
use oblearn::cli::{config as cli_config, io as cli_io, run, CliError, RunConfig, Subcommand};
use oblearn::estimate::{
    fit_beta_logit, fit_beta_tilde_nls, fit_c_ols, EstimationResult, NlsOptions, PosteriorSource,
};
use oblearn::sim::{simulate_experiment, Condition, Panel};

/// Outcome of a call. `OK` is zero; the error codes mirror the CLI exit
/// codes, plus `ARGUMENT` for misuse of this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OblearnStatus {
    /// Success.
    Ok = 0,
    /// Null pointer, invalid UTF-8, bad enum value, or an internal fault.
    Argument = 1,
    /// Configuration rejected (CLI exit code 2).
    Config = 2,
    /// Data unreadable or insufficient (CLI exit code 3).
    Data = 3,
    /// Estimation failed to converge or the system is degenerate (CLI exit
    /// code 4).
    Numeric = 4,
}

/// Which experimental condition of a panel an analysis runs on.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OblearnCondition {
    /// Rounds where the subject saw a ball draw directly.
    Individual = 0,
    /// Rounds where the subject saw a neighbor's guess.
    Social = 1,
}

/// Belief column used when fitting the choice-precision parameter.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OblearnPosteriorSource {
    /// The subject's reported posterior.
    Reported = 0,
    /// The exact posterior implied by what the subject observed.
    Bayesian = 1,
}

/// One estimated parameter with its uncertainty and fit diagnostics.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OblearnEstimate {
    /// Point estimate.
    pub estimate: f64,
    /// Standard error (may be infinite when the objective is flat).
    pub std_error: f64,
    /// Observations entering the fit.
    pub n_used: u64,
    /// Observations dropped by the usability rules.
    pub n_dropped: u64,
    /// Whether the optimizer met its convergence test.
    pub converged: bool,
    /// Whether a non-fatal diagnostic was attached (boundary solution,
    /// monotone likelihood, flat objective, ...).
    pub has_warning: bool,
    /// Iterations used by the optimizer (zero for closed-form fits).
    pub iterations: u64,
    /// Residual sum of squares for least-squares fits, log-likelihood for
    /// maximum-likelihood fits.
    pub objective: f64,
}

/// Error counts and rates for one condition of a panel. Rates use the
/// classified (non-excluded) rounds as denominator.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OblearnRates {
    /// Classified rounds (excluded rounds are not counted here).
    pub n: u64,
    /// Rounds without a benchmark, left out of every rate.
    pub excluded: u64,
    /// Choices against the benchmark.
    pub irrational: u64,
    /// Irrational choices whose reported belief already contradicted the
    /// benchmark.
    pub posterior_errors: u64,
    /// Irrational choices made despite a reported belief favoring the
    /// benchmark.
    pub reasoning_errors: u64,
    /// irrational / n (NaN when n is zero).
    pub irrational_rate: f64,
    /// posterior_errors / n (NaN when n is zero).
    pub posterior_error_rate: f64,
    /// reasoning_errors / n (NaN when n is zero).
    pub reasoning_error_rate: f64,
}

/// Opaque pipeline configuration handle.
pub struct OblearnConfig {
    inner: RunConfig,
}

/// Opaque experiment-panel handle.
pub struct OblearnPanel {
    inner: Panel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let stored = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn status_of(error: CliError) -> OblearnStatus {
    let status = match error.exit_code() {
        2 => OblearnStatus::Config,
        4 => OblearnStatus::Numeric,
        _ => OblearnStatus::Data,
    };
    set_last_error(error.to_string());
    status
}

fn argument_error(message: &str) -> OblearnStatus {
    set_last_error(message.to_string());
    OblearnStatus::Argument
}

/// Runs `body` with panics converted to `ARGUMENT` so unwinding never
/// crosses the ABI boundary.
fn guarded(body: impl FnOnce() -> OblearnStatus) -> OblearnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            argument_error(&format!("internal fault: {detail}"))
        }
    }
}

/// # Safety
/// `text` must be null or a valid nul-terminated string.
unsafe fn utf8_arg<'a>(text: *const c_char, what: &str) -> Result<&'a str, OblearnStatus> {
    if text.is_null() {
        return Err(argument_error(&format!("{what} is null")));
    }
    unsafe { CStr::from_ptr(text) }
        .to_str()
        .map_err(|_| argument_error(&format!("{what} is not valid UTF-8")))
}

fn condition_of(condition: OblearnCondition) -> Condition {
    match condition {
        OblearnCondition::Individual => Condition::Individual,
        OblearnCondition::Social => Condition::Social,
    }
}

fn fill_estimate(out: &mut OblearnEstimate, fit: &EstimationResult) {
    *out = OblearnEstimate {
        estimate: fit.estimate,
        std_error: fit.std_error,
        n_used: fit.n_used as u64,
        n_dropped: fit.n_dropped as u64,
        converged: fit.converged,
        has_warning: fit.warning.is_some(),
        iterations: fit.iterations as u64,
        objective: fit.objective_at_optimum,
    };
}

/// Version of the toolkit, as a static nul-terminated string. Never null;
/// do not free.
#[no_mangle]
pub extern "C" fn oblearn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or null if no call
/// has failed yet. Valid until the next failing call on the same thread; do
/// not free.
#[no_mangle]
pub extern "C" fn oblearn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Creates a configuration with the built-in defaults (four treatment arms,
/// behavioral agents, fixed seed). Never fails; free with
/// `oblearn_config_free`.
#[no_mangle]
pub extern "C" fn oblearn_config_default() -> *mut OblearnConfig {
    Box::into_raw(Box::new(OblearnConfig {
        inner: RunConfig::default(),
    }))
}

/// Parses a configuration from the flat `key = value` text format used by
/// the CLI's `--config` file. On success stores a new handle in `*out`.
///
/// # Safety
/// `text` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oblearn_config_parse(
    text: *const c_char,
    out: *mut *mut OblearnConfig,
) -> OblearnStatus {
    guarded(|| {
        if out.is_null() {
            return argument_error("out is null");
        }
        let text = match unsafe { utf8_arg(text, "config text") } {
            Ok(text) => text,
            Err(status) => return status,
        };
        match cli_config::parse(text) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(OblearnConfig { inner })) };
                OblearnStatus::Ok
            }
            Err(error) => status_of(error),
        }
    })
}

/// Overrides the master seed of an existing configuration.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oblearn_config_set_seed(
    config: *mut OblearnConfig,
    seed: u64,
) -> OblearnStatus {
    guarded(|| {
        let Some(config) = (unsafe { config.as_mut() }) else {
            return argument_error("config is null");
        };
        config.inner.sim.master_seed = seed;
        OblearnStatus::Ok
    })
}

/// Releases a configuration handle. Accepts null.
///
/// # Safety
/// `config` must be null or a live handle; it is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn oblearn_config_free(config: *mut OblearnConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Simulates an experiment panel from a configuration and stores a new
/// panel handle in `*out`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oblearn_panel_simulate(
    config: *const OblearnConfig,
    out: *mut *mut OblearnPanel,
) -> OblearnStatus {
    guarded(|| {
        if out.is_null() {
            return argument_error("out is null");
        }
        let Some(config) = (unsafe { config.as_ref() }) else {
            return argument_error("config is null");
        };
        match simulate_experiment(&config.inner.sim) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(OblearnPanel { inner })) };
                OblearnStatus::Ok
            }
            Err(error) => status_of(error.into()),
        }
    })
}

/// Reads a panel from a CSV file written by this toolkit and stores a new
/// panel handle in `*out`.
///
/// # Safety
/// `path` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oblearn_panel_read(
    path: *const c_char,
    out: *mut *mut OblearnPanel,
) -> OblearnStatus {
    guarded(|| {
        if out.is_null() {
            return argument_error("out is null");
        }
        let path = match unsafe { utf8_arg(path, "path") } {
            Ok(path) => PathBuf::from(path),
            Err(status) => return status,
        };
        match cli_io::read_panel(&path) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(OblearnPanel { inner })) };
                OblearnStatus::Ok
            }
            Err(error) => status_of(error),
        }
    })
}

/// Writes a panel to a CSV file in the toolkit's schema.
///
/// # Safety
/// `panel` must be a live handle and `path` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn oblearn_panel_write(
    panel: *const OblearnPanel,
    path: *const c_char,
) -> OblearnStatus {
    guarded(|| {
        let Some(panel) = (unsafe { panel.as_ref() }) else {
            return argument_error("panel is null");
        };
        let path = match unsafe { utf8_arg(path, "path") } {
            Ok(path) => PathBuf::from(path),
            Err(status) => return status,
        };
        match cli_io::write_panel(&panel.inner, &path) {
            Ok(()) => OblearnStatus::Ok,
            Err(error) => status_of(error),
        }
    })
}

/// Number of trial records in a panel (zero if `panel` is null).
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn oblearn_panel_len(panel: *const OblearnPanel) -> u64 {
    unsafe { panel.as_ref() }.map_or(0, |p| p.inner.len() as u64)
}

/// Releases a panel handle. Accepts null.
///
/// # Safety
/// `panel` must be null or a live handle; it is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn oblearn_panel_free(panel: *mut OblearnPanel) {
    if !panel.is_null() {
        drop(unsafe { Box::from_raw(panel) });
    }
}

/// Classifies every round of one condition and fills `*out` with the error
/// counts and rates. When `tie_counts_as_reasoning` is false a 50/50 report
/// on an irrational choice counts as a posterior error, otherwise as a
/// reasoning error.
///
/// # Safety
/// `panel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oblearn_rates(
    panel: *const OblearnPanel,
    condition: OblearnCondition,
    tie_counts_as_reasoning: bool,
    out: *mut OblearnRates,
) -> OblearnStatus {
    guarded(|| {
        let Some(panel) = (unsafe { panel.as_ref() }) else {
            return argument_error("panel is null");
        };
        let Some(out) = (unsafe { out.as_mut() }) else {
            return argument_error("out is null");
        };
        let options = ClassifyOptions {
            tie_rule: if tie_counts_as_reasoning {
                TieRule::TieIsReasoningError
            } else {
                TieRule::TieIsPosteriorError
            },
        };
        let tables = match rate_tables(&panel.inner, &options) {
            Ok(tables) => tables,
            Err(error) => return status_of(error.into()),
        };
        let cell = tables
            .overall
            .get(&condition_of(condition))
            .copied()
            .unwrap_or_default();
        *out = OblearnRates {
            n: cell.n,
            excluded: cell.excluded,
            irrational: cell.irrational,
            posterior_errors: cell.posterior_errors,
            reasoning_errors: cell.reasoning_errors,
            irrational_rate: cell.rate(),
            posterior_error_rate: cell.posterior_error_rate(),
            reasoning_error_rate: cell.reasoning_error_rate(),
        };
        OblearnStatus::Ok
    })
}

/// Fits the belief-updating exponent on one condition by least squares on
/// log-odds. `winsorize` pulls 0/100 reports to 1/99 instead of dropping
/// them.
///
/// # Safety
/// `panel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oblearn_fit_update_exponent(
    panel: *const OblearnPanel,
    condition: OblearnCondition,
    winsorize: bool,
    out: *mut OblearnEstimate,
) -> OblearnStatus {
    guarded(|| {
        let Some(panel) = (unsafe { panel.as_ref() }) else {
            return argument_error("panel is null");
        };
        let Some(out) = (unsafe { out.as_mut() }) else {
            return argument_error("out is null");
        };
        match fit_c_ols(&panel.inner, condition_of(condition), winsorize) {
            Ok(fit) => {
                fill_estimate(out, &fit);
                OblearnStatus::Ok
            }
            Err(error) => status_of(error.into()),
        }
    })
}

/// Fits the choice-precision parameter on one condition by maximum
/// likelihood, using the given belief source and monetary stake.
///
/// # Safety
/// `panel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oblearn_fit_choice_precision(
    panel: *const OblearnPanel,
    condition: OblearnCondition,
    source: OblearnPosteriorSource,
    stake: f64,
    out: *mut OblearnEstimate,
) -> OblearnStatus {
    guarded(|| {
        let Some(panel) = (unsafe { panel.as_ref() }) else {
            return argument_error("panel is null");
        };
        let Some(out) = (unsafe { out.as_mut() }) else {
            return argument_error("out is null");
        };
        let source = match source {
            OblearnPosteriorSource::Reported => PosteriorSource::Reported,
            OblearnPosteriorSource::Bayesian => PosteriorSource::Bayesian,
        };
        match fit_beta_logit(&panel.inner, condition_of(condition), source, stake) {
            Ok(fit) => {
                fill_estimate(out, &fit);
                OblearnStatus::Ok
            }
            Err(error) => status_of(error.into()),
        }
    })
}

/// Fits the precision subjects attribute to their neighbors by nonlinear
/// least squares on social-round log-odds, holding the updating exponent at
/// `exponent`. `include_bot` adds bot-neighbor rounds to the fit.
///
/// # Safety
/// `panel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oblearn_fit_attributed_precision(
    panel: *const OblearnPanel,
    exponent: f64,
    stake: f64,
    include_bot: bool,
    out: *mut OblearnEstimate,
) -> OblearnStatus {
    guarded(|| {
        let Some(panel) = (unsafe { panel.as_ref() }) else {
            return argument_error("panel is null");
        };
        let Some(out) = (unsafe { out.as_mut() }) else {
            return argument_error("out is null");
        };
        let options = NlsOptions {
            include_bot,
            ..NlsOptions::default()
        };
        match fit_beta_tilde_nls(&panel.inner, exponent, stake, &options) {
            Ok(fit) => {
                fill_estimate(out, &fit);
                OblearnStatus::Ok
            }
            Err(error) => status_of(error.into()),
        }
    })
}

/// Runs the full pipeline (simulate or load, classify, estimate, smooth,
/// test) and writes every artifact into `out_dir`, like the CLI `report`
/// subcommand.
///
/// # Safety
/// `config` must be a live handle and `out_dir` a valid nul-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn oblearn_report(
    config: *const OblearnConfig,
    out_dir: *const c_char,
) -> OblearnStatus {
    guarded(|| {
        let Some(config) = (unsafe { config.as_ref() }) else {
            return argument_error("config is null");
        };
        let out_dir = match unsafe { utf8_arg(out_dir, "out_dir") } {
            Ok(dir) => PathBuf::from(dir),
            Err(status) => return status,
        };
        let mut run_config = config.inner.clone();
        run_config.out_dir = out_dir;
        match run(Subcommand::Report, &run_config) {
            Ok(()) => OblearnStatus::Ok,
            Err(error) => status_of(error),
        }
    })
}
