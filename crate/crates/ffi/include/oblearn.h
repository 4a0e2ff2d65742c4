/* C interface to the oblearn simulation and estimation toolkit. */

#ifndef OBLEARN_H
#define OBLEARN_H

/* Generated by cbindgen from the oblearn-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call. `OK` is zero; the error codes mirror the CLI exit
// codes, plus `ARGUMENT` for misuse of this interface.
typedef enum OblearnStatus {
  // Success.
  OBLEARN_STATUS_OK = 0,
  // Null pointer, invalid UTF-8, bad enum value, or an internal fault.
  OBLEARN_STATUS_ARGUMENT = 1,
  // Configuration rejected (CLI exit code 2).
  OBLEARN_STATUS_CONFIG = 2,
  // Data unreadable or insufficient (CLI exit code 3).
  OBLEARN_STATUS_DATA = 3,
  // Estimation failed to converge or the system is degenerate (CLI exit
  // code 4).
  OBLEARN_STATUS_NUMERIC = 4,
} OblearnStatus;

// Which experimental condition of a panel an analysis runs on.
typedef enum OblearnCondition {
  // Rounds where the subject saw a ball draw directly.
  OBLEARN_CONDITION_INDIVIDUAL = 0,
  // Rounds where the subject saw a neighbor's guess.
  OBLEARN_CONDITION_SOCIAL = 1,
} OblearnCondition;

// Belief column used when fitting the choice-precision parameter.
typedef enum OblearnPosteriorSource {
  // The subject's reported posterior.
  OBLEARN_POSTERIOR_SOURCE_REPORTED = 0,
  // The exact posterior implied by what the subject observed.
  OBLEARN_POSTERIOR_SOURCE_BAYESIAN = 1,
} OblearnPosteriorSource;

// Opaque pipeline configuration handle.
typedef struct OblearnConfig OblearnConfig;

// Opaque experiment-panel handle.
typedef struct OblearnPanel OblearnPanel;

// Error counts and rates for one condition of a panel. Rates use the
// classified (non-excluded) rounds as denominator.
typedef struct OblearnRates {
  // Classified rounds (excluded rounds are not counted here).
  uint64_t n;
  // Rounds without a benchmark, left out of every rate.
  uint64_t excluded;
  // Choices against the benchmark.
  uint64_t irrational;
  // Irrational choices whose reported belief already contradicted the
  // benchmark.
  uint64_t posterior_errors;
  // Irrational choices made despite a reported belief favoring the
  // benchmark.
  uint64_t reasoning_errors;
  // irrational / n (NaN when n is zero).
  double irrational_rate;
  // posterior_errors / n (NaN when n is zero).
  double posterior_error_rate;
  // reasoning_errors / n (NaN when n is zero).
  double reasoning_error_rate;
} OblearnRates;

// One estimated parameter with its uncertainty and fit diagnostics.
typedef struct OblearnEstimate {
  // Point estimate.
  double estimate;
  // Standard error (may be infinite when the objective is flat).
  double std_error;
  // Observations entering the fit.
  uint64_t n_used;
  // Observations dropped by the usability rules.
  uint64_t n_dropped;
  // Whether the optimizer met its convergence test.
  bool converged;
  // Whether a non-fatal diagnostic was attached (boundary solution,
  // monotone likelihood, flat objective, ...).
  bool has_warning;
  // Iterations used by the optimizer (zero for closed-form fits).
  uint64_t iterations;
  // Residual sum of squares for least-squares fits, log-likelihood for
  // maximum-likelihood fits.
  double objective;
} OblearnEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the toolkit, as a static nul-terminated string. Never null;
// do not free.
const char *oblearn_version(void);

// Message describing the last failure on this thread, or null if no call
// has failed yet. Valid until the next failing call on the same thread; do
// not free.
const char *oblearn_last_error_message(void);

// Creates a configuration with the built-in defaults (four treatment arms,
// behavioral agents, fixed seed). Never fails; free with
// `oblearn_config_free`.
struct OblearnConfig *oblearn_config_default(void);

// Parses a configuration from the flat `key = value` text format used by
// the CLI's `--config` file. On success stores a new handle in `*out`.
//
// # Safety
// `text` must be a valid nul-terminated string and `out` a valid pointer.
enum OblearnStatus oblearn_config_parse(const char *text, struct OblearnConfig **out);

// Overrides the master seed of an existing configuration.
//
// # Safety
// `config` must be a live handle from this library.
enum OblearnStatus oblearn_config_set_seed(struct OblearnConfig *config, uint64_t seed);

// Releases a configuration handle. Accepts null.
//
// # Safety
// `config` must be null or a live handle; it is dead afterwards.
void oblearn_config_free(struct OblearnConfig *config);

// Simulates an experiment panel from a configuration and stores a new
// panel handle in `*out`.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum OblearnStatus oblearn_panel_simulate(const struct OblearnConfig *config,
                                          struct OblearnPanel **out);

// Reads a panel from a CSV file written by this toolkit and stores a new
// panel handle in `*out`.
//
// # Safety
// `path` must be a valid nul-terminated string and `out` a valid pointer.
enum OblearnStatus oblearn_panel_read(const char *path, struct OblearnPanel **out);

// Writes a panel to a CSV file in the toolkit's schema.
//
// # Safety
// `panel` must be a live handle and `path` a valid nul-terminated string.
enum OblearnStatus oblearn_panel_write(const struct OblearnPanel *panel, const char *path);

// Number of trial records in a panel (zero if `panel` is null).
//
// # Safety
// `panel` must be null or a live handle.
uint64_t oblearn_panel_len(const struct OblearnPanel *panel);

// Releases a panel handle. Accepts null.
//
// # Safety
// `panel` must be null or a live handle; it is dead afterwards.
void oblearn_panel_free(struct OblearnPanel *panel);

// Classifies every round of one condition and fills `*out` with the error
// counts and rates. When `tie_counts_as_reasoning` is false a 50/50 report
// on an irrational choice counts as a posterior error, otherwise as a
// reasoning error.
//
// # Safety
// `panel` must be a live handle and `out` a valid pointer.
enum OblearnStatus oblearn_rates(const struct OblearnPanel *panel,
                                 enum OblearnCondition condition,
                                 bool tie_counts_as_reasoning,
                                 struct OblearnRates *out);

// Fits the belief-updating exponent on one condition by least squares on
// log-odds. `winsorize` pulls 0/100 reports to 1/99 instead of dropping
// them.
//
// # Safety
// `panel` must be a live handle and `out` a valid pointer.
enum OblearnStatus oblearn_fit_update_exponent(const struct OblearnPanel *panel,
                                               enum OblearnCondition condition,
                                               bool winsorize,
                                               struct OblearnEstimate *out);

// Fits the choice-precision parameter on one condition by maximum
// likelihood, using the given belief source and monetary stake.
//
// # Safety
// `panel` must be a live handle and `out` a valid pointer.
enum OblearnStatus oblearn_fit_choice_precision(const struct OblearnPanel *panel,
                                                enum OblearnCondition condition,
                                                enum OblearnPosteriorSource source,
                                                double stake,
                                                struct OblearnEstimate *out);

// Fits the precision subjects attribute to their neighbors by nonlinear
// least squares on social-round log-odds, holding the updating exponent at
// `exponent`. `include_bot` adds bot-neighbor rounds to the fit.
//
// # Safety
// `panel` must be a live handle and `out` a valid pointer.
enum OblearnStatus oblearn_fit_attributed_precision(const struct OblearnPanel *panel,
                                                    double exponent,
                                                    double stake,
                                                    bool include_bot,
                                                    struct OblearnEstimate *out);

// Runs the full pipeline (simulate or load, classify, estimate, smooth,
// test) and writes every artifact into `out_dir`, like the CLI `report`
// subcommand.
//
// # Safety
// `config` must be a live handle and `out_dir` a valid nul-terminated
// string.
enum OblearnStatus oblearn_report(const struct OblearnConfig *config, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OBLEARN_H */
