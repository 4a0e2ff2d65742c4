//! Flat `key = value` run configuration.
//!
//! The format is one assignment per line; blank lines and lines starting
//! with `#` are ignored. Unknown keys and duplicate keys are rejected so a
//! typo cannot silently fall back to a default. Recognized keys:
//!
//! | key | value | default |
//! |---|---|---|
//! | `master_seed` | unsigned integer | 7654321 |
//! | `treatments` | comma list of `BASE`,`DEMO`,`BOT`,`BALL` | all four |
//! | `subjects_base` … `subjects_ball` | subjects per arm | 40/34/38/39 |
//! | `rounds_per_condition` | rounds each subject plays per condition | 21 |
//! | `stake` | dollars at stake per round | 12.0 |
//! | `pool_size` | prior subjects in the neighbor pool | 94 |
//! | `randomize_condition_order` | `true`/`false` | true |
//! | `bot_beta_tilde` | precision attributed to the bot neighbor | 1000 |
//! | `agent_kind` | `structural` or `rational` | structural |
//! | `c`, `beta`, `beta_tilde`, `c_tilde`, `report_noise_sd` | parameter distribution (below) | model defaults |
//! | `posterior_tie_rule` | `posterior` or `reasoning` | posterior |
//! | `bandwidth` | kernel bandwidth in percent | 15 |
//! | `posterior_source` | `reported` or `bayes` | reported |
//! | `winsorize` | `true`/`false` | false |
//! | `include_bot_nls` | `true`/`false` | false |
//! | `out_dir` | artifact directory | `out` |
//! | `panel` | analyze this panel CSV instead of simulating | none |
//! | `report_sections` | `all` or comma list of `rates`,`estimates`,`curves`,`tests` | all |
//! | `verbosity` | `0` or `1` | 0 |
//!
//! Parameter distributions: a bare number is a point mass; `point:V`,
//! `uniform:LO,HI`, and `normal:MEAN,SD,LO,HI` (normal draws are clamped
//! into [LO, HI]) spell the three families out.

use super::{CliError, ReportSections, RunConfig};
use crate::agents::AgentKind;
use crate::classify::TieRule;
use crate::estimate::PosteriorSource;
use crate::sim::{ParamDist, Treatment};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

fn bad(line_no: usize, message: impl Into<String>) -> CliError {
    CliError::Config(format!("line {line_no}: {}", message.into()))
}

fn parse_number<T: std::str::FromStr>(
    line_no: usize,
    key: &str,
    value: &str,
) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| bad(line_no, format!("`{key}` got unparseable value `{value}`")))
}

fn parse_bool(line_no: usize, key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(
            line_no,
            format!("`{key}` must be `true` or `false`, got `{value}`"),
        )),
    }
}

fn parse_treatment(line_no: usize, value: &str) -> Result<Treatment, CliError> {
    match value {
        "BASE" => Ok(Treatment::Base),
        "DEMO" => Ok(Treatment::Demographics),
        "BOT" => Ok(Treatment::Bot),
        "BALL" => Ok(Treatment::Ball),
        _ => Err(bad(
            line_no,
            format!("unknown treatment `{value}` (expected BASE, DEMO, BOT, or BALL)"),
        )),
    }
}

fn parse_dist(line_no: usize, key: &str, value: &str) -> Result<ParamDist, CliError> {
    let parts = |spec: &str, want: usize| -> Result<Vec<f64>, CliError> {
        let values: Result<Vec<f64>, _> = spec.split(',').map(str::trim).map(str::parse).collect();
        match values {
            Ok(v) if v.len() == want => Ok(v),
            _ => Err(bad(
                line_no,
                format!(
                    "`{key}` expects {want} comma-separated numbers after the colon, got `{spec}`"
                ),
            )),
        }
    };
    if let Some(spec) = value.strip_prefix("point:") {
        return Ok(ParamDist::Point(parts(spec, 1)?[0]));
    }
    if let Some(spec) = value.strip_prefix("uniform:") {
        let v = parts(spec, 2)?;
        return Ok(ParamDist::Uniform { lo: v[0], hi: v[1] });
    }
    if let Some(spec) = value.strip_prefix("normal:") {
        let v = parts(spec, 4)?;
        return Ok(ParamDist::Normal {
            mean: v[0],
            sd: v[1],
            lo: v[2],
            hi: v[3],
        });
    }
    value.parse().map(ParamDist::Point).map_err(|_| {
        bad(
            line_no,
            format!("`{key}` got unparseable distribution `{value}`"),
        )
    })
}

fn parse_sections(line_no: usize, value: &str) -> Result<ReportSections, CliError> {
    if value == "all" {
        return Ok(ReportSections::default());
    }
    let mut sections = ReportSections {
        rates: false,
        estimates: false,
        curves: false,
        tests: false,
    };
    for part in value.split(',').map(str::trim) {
        match part {
            "rates" => sections.rates = true,
            "estimates" => sections.estimates = true,
            "curves" => sections.curves = true,
            "tests" => sections.tests = true,
            _ => {
                return Err(bad(
                    line_no,
                    format!(
                    "unknown report section `{part}` (expected rates, estimates, curves, tests)"
                ),
                ))
            }
        }
    }
    Ok(sections)
}

/// Parses configuration text into a [`RunConfig`], starting from defaults.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((raw_key, raw_value)) = line.split_once('=') else {
            return Err(bad(
                line_no,
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let key = raw_key.trim();
        let value = raw_value.trim();
        if value.is_empty() {
            return Err(bad(line_no, format!("`{key}` has no value")));
        }
        if !seen.insert(key.to_string()) {
            return Err(bad(line_no, format!("duplicate key `{key}`")));
        }
        match key {
            "master_seed" => config.sim.master_seed = parse_number(line_no, key, value)?,
            "treatments" => {
                let mut treatments = Vec::new();
                for part in value.split(',').map(str::trim) {
                    let treatment = parse_treatment(line_no, part)?;
                    if treatments.contains(&treatment) {
                        return Err(bad(line_no, format!("treatment `{part}` listed twice")));
                    }
                    treatments.push(treatment);
                }
                if treatments.is_empty() {
                    return Err(bad(line_no, "`treatments` must list at least one arm"));
                }
                config.sim.treatments = treatments;
            }
            "subjects_base" => {
                let n = parse_number(line_no, key, value)?;
                config.sim.subjects.insert(Treatment::Base, n);
            }
            "subjects_demo" => {
                let n = parse_number(line_no, key, value)?;
                config.sim.subjects.insert(Treatment::Demographics, n);
            }
            "subjects_bot" => {
                let n = parse_number(line_no, key, value)?;
                config.sim.subjects.insert(Treatment::Bot, n);
            }
            "subjects_ball" => {
                let n = parse_number(line_no, key, value)?;
                config.sim.subjects.insert(Treatment::Ball, n);
            }
            "rounds_per_condition" => {
                config.sim.rounds_per_condition = parse_number(line_no, key, value)?
            }
            "stake" => config.sim.stake = parse_number(line_no, key, value)?,
            "pool_size" => config.sim.pool_size = parse_number(line_no, key, value)?,
            "randomize_condition_order" => {
                config.sim.randomize_condition_order = parse_bool(line_no, key, value)?
            }
            "bot_beta_tilde" => config.sim.bot_beta_tilde = parse_number(line_no, key, value)?,
            "agent_kind" => {
                config.sim.population.kind = match value {
                    "structural" => AgentKind::Structural,
                    "rational" => AgentKind::ExactBayesianRational,
                    _ => {
                        return Err(bad(
                            line_no,
                            format!(
                                "`agent_kind` must be `structural` or `rational`, got `{value}`"
                            ),
                        ))
                    }
                }
            }
            "c" => config.sim.population.c = parse_dist(line_no, key, value)?,
            "beta" => config.sim.population.beta = parse_dist(line_no, key, value)?,
            "beta_tilde" => config.sim.population.beta_tilde = parse_dist(line_no, key, value)?,
            "c_tilde" => config.sim.population.c_tilde = parse_dist(line_no, key, value)?,
            "report_noise_sd" => {
                config.sim.population.report_noise_sd = parse_dist(line_no, key, value)?
            }
            "posterior_tie_rule" => {
                config.tie_rule = match value {
                    "posterior" => TieRule::TieIsPosteriorError,
                    "reasoning" => TieRule::TieIsReasoningError,
                    _ => {
                        return Err(bad(
                            line_no,
                            format!(
                        "`posterior_tie_rule` must be `posterior` or `reasoning`, got `{value}`"
                    ),
                        ))
                    }
                }
            }
            "bandwidth" => config.bandwidth = parse_number(line_no, key, value)?,
            "posterior_source" => {
                config.posterior_source = match value {
                    "reported" => PosteriorSource::Reported,
                    "bayes" => PosteriorSource::Bayesian,
                    _ => {
                        return Err(bad(
                            line_no,
                            format!(
                                "`posterior_source` must be `reported` or `bayes`, got `{value}`"
                            ),
                        ))
                    }
                }
            }
            "winsorize" => config.winsorize = parse_bool(line_no, key, value)?,
            "include_bot_nls" => config.include_bot_nls = parse_bool(line_no, key, value)?,
            "out_dir" => config.out_dir = PathBuf::from(value),
            "panel" => config.panel_path = Some(PathBuf::from(value)),
            "report_sections" => config.sections = parse_sections(line_no, value)?,
            "verbosity" => {
                let v: u8 = parse_number(line_no, key, value)?;
                if v > 1 {
                    return Err(bad(line_no, format!("`verbosity` must be 0 or 1, got {v}")));
                }
                config.verbosity = v;
            }
            _ => return Err(bad(line_no, format!("unknown key `{key}`"))),
        }
    }
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}
