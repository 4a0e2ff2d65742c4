//! Subcommand pipelines: each one chains simulation (or panel ingestion)
//! into its analysis artifacts. Every artifact is deterministic given the
//! master seed: map iteration orders are fixed, float formatting is fixed,
//! and nothing reads wall-clock time or ambient randomness.

use super::io::{read_panel, write_panel_with_comments};
use super::{CliError, RunConfig, Subcommand};
use crate::classify::{rate_tables, ClassifyOptions, RateCell, RateTables};
use crate::estimate::kernel::{curve_inputs, default_grid, kernel_regression, CurveKind};
use crate::estimate::regression::{fit_irrationality_logit, fit_subject_ols, RegressionFit};
use crate::estimate::{
    fit_beta_logit, fit_beta_tilde_nls, fit_c_ols, EstimateError, EstimationResult, NlsOptions,
    PosteriorSource,
};
use crate::sim::{
    simulate_experiment, simulate_pool, Condition, Covariates, Panel, SubjectKey, Treatment,
};
use crate::stats::{anderson_darling_2, paired_rate_test, two_prop_test, TestResult};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        format!("{v:.9}")
    }
}

fn condition_code(condition: Condition) -> &'static str {
    match condition {
        Condition::Individual => "IND",
        Condition::Social => "SOC",
    }
}

struct Artifacts<'a> {
    config: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    fn new(config: &'a RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&config.out_dir).map_err(|e| {
            CliError::Data(format!("cannot create {}: {e}", config.out_dir.display()))
        })?;
        Ok(Artifacts {
            config,
            written: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn note_written(&mut self, path: &Path) {
        if self.config.verbosity >= 1 {
            eprintln!("wrote {}", path.display());
        }
        self.written.push(path.to_path_buf());
    }

    /// Writes a report CSV: seed and version comments, header, rows.
    fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut out = String::new();
        let _ = writeln!(out, "# master_seed: {}", self.config.sim.master_seed);
        let _ = writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"));
        out.push_str(header);
        out.push('\n');
        for row in rows {
            out.push_str(row);
            out.push('\n');
        }
        std::fs::write(&path, out)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        self.note_written(&path);
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        self.note_written(&path);
        Ok(())
    }
}

/// Loads the configured panel file, or simulates one from the run config.
fn obtain_panel(config: &RunConfig) -> Result<Panel, CliError> {
    match &config.panel_path {
        Some(path) => read_panel(path),
        None => Ok(simulate_experiment(&config.sim)?),
    }
}

pub fn run(subcommand: Subcommand, config: &RunConfig) -> Result<(), CliError> {
    let mut artifacts = Artifacts::new(config)?;
    match subcommand {
        Subcommand::Simulate => write_simulation(&mut artifacts)?,
        Subcommand::Classify => {
            let panel = obtain_panel(config)?;
            write_rates(&mut artifacts, &panel)?;
        }
        Subcommand::Estimate => {
            let panel = obtain_panel(config)?;
            write_estimates(&mut artifacts, &panel)?;
        }
        Subcommand::Kernel => {
            let panel = obtain_panel(config)?;
            write_curves(&mut artifacts, &panel)?;
        }
        Subcommand::Test => {
            let panel = obtain_panel(config)?;
            write_tests(&mut artifacts, &panel)?;
        }
        Subcommand::Report => {
            let panel = match &config.panel_path {
                Some(path) => read_panel(path)?,
                None => {
                    write_simulation(&mut artifacts)?;
                    read_panel(&artifacts.path("panel.csv"))?
                }
            };
            let mut summary = SummaryInputs::default();
            if config.sections.rates {
                summary.tables = Some(write_rates(&mut artifacts, &panel)?);
            }
            if config.sections.estimates {
                summary.estimates = Some(write_estimates(&mut artifacts, &panel)?);
            }
            if config.sections.curves {
                summary.curve_files = write_curves(&mut artifacts, &panel)?;
            }
            if config.sections.tests {
                summary.battery = Some(write_tests(&mut artifacts, &panel)?);
            }
            let text = render_summary(config, &panel, &summary);
            artifacts.write_text("summary.txt", &text)?;
        }
    }
    Ok(())
}

fn write_simulation(artifacts: &mut Artifacts) -> Result<(), CliError> {
    let config = artifacts.config;
    let comments = vec![
        format!("master_seed: {}", config.sim.master_seed),
        format!("version: {}", env!("CARGO_PKG_VERSION")),
    ];
    let panel = simulate_experiment(&config.sim)?;
    let path = artifacts.path("panel.csv");
    write_panel_with_comments(&panel, &path, &comments)?;
    artifacts.note_written(&path);
    let pool = simulate_pool(&config.sim, config.sim.master_seed)?;
    let path = artifacts.path("pool.csv");
    write_panel_with_comments(&pool, &path, &comments)?;
    artifacts.note_written(&path);
    Ok(())
}

const RATE_TAIL: &str =
    "n,excluded,irrational,irrational_rate,rate_se,posterior_errors,posterior_error_rate,\
reasoning_errors,reasoning_error_rate";

fn cell_fields(cell: &RateCell) -> String {
    [
        cell.n.to_string(),
        cell.excluded.to_string(),
        cell.irrational.to_string(),
        fmt_float(cell.rate()),
        fmt_float(cell.se()),
        cell.posterior_errors.to_string(),
        fmt_float(cell.posterior_error_rate()),
        cell.reasoning_errors.to_string(),
        fmt_float(cell.reasoning_error_rate()),
    ]
    .join(",")
}

fn write_rates(artifacts: &mut Artifacts, panel: &Panel) -> Result<RateTables, CliError> {
    let options = ClassifyOptions {
        tie_rule: artifacts.config.tie_rule,
    };
    let tables = rate_tables(panel, &options)?;

    let rows: Vec<String> = tables
        .overall
        .iter()
        .map(|(c, cell)| format!("{},{}", condition_code(*c), cell_fields(cell)))
        .collect();
    artifacts.write_csv(
        "rates_overall.csv",
        &format!("condition,{RATE_TAIL}"),
        &rows,
    )?;

    let rows: Vec<String> = tables
        .by_treatment
        .iter()
        .map(|((t, c), cell)| {
            format!(
                "{},{},{}",
                t.session_id(),
                condition_code(*c),
                cell_fields(cell)
            )
        })
        .collect();
    artifacts.write_csv(
        "rates_by_treatment.csv",
        &format!("treatment,condition,{RATE_TAIL}"),
        &rows,
    )?;

    let rows: Vec<String> = tables
        .by_subject
        .iter()
        .map(|(((session, subject), c), cell)| {
            format!(
                "{session},{subject},{},{}",
                condition_code(*c),
                cell_fields(cell)
            )
        })
        .collect();
    artifacts.write_csv(
        "rates_by_subject.csv",
        &format!("session_id,subject_id,condition,{RATE_TAIL}"),
        &rows,
    )?;

    for (name, table) in [
        ("rates_by_structure.csv", &tables.by_structure),
        ("rates_by_structure_signal.csv", &tables.by_structure_signal),
    ] {
        let rows: Vec<String> = table
            .iter()
            .map(|((c, s), cell)| {
                format!(
                    "{},{},{},{}",
                    condition_code(*c),
                    s.white_in_x(),
                    s.black_in_y(),
                    cell_fields(cell)
                )
            })
            .collect();
        artifacts.write_csv(
            name,
            &format!("condition,white_in_x,black_in_y,{RATE_TAIL}"),
            &rows,
        )?;
    }

    let rows: Vec<String> = tables
        .between_subject
        .iter()
        .map(|(c, cell)| format!("{},{}", condition_code(*c), cell_fields(cell)))
        .collect();
    artifacts.write_csv(
        "rates_between_subject.csv",
        &format!("condition,{RATE_TAIL}"),
        &rows,
    )?;

    let rows: Vec<String> = tables
        .between_subject_by_treatment
        .iter()
        .map(|((t, c), cell)| {
            format!(
                "{},{},{}",
                t.session_id(),
                condition_code(*c),
                cell_fields(cell)
            )
        })
        .collect();
    artifacts.write_csv(
        "rates_between_by_treatment.csv",
        &format!("treatment,condition,{RATE_TAIL}"),
        &rows,
    )?;

    Ok(tables)
}

/// One row of the estimate table: a fitted quantity or the reason it was
/// skipped.
pub struct EstimateRow {
    pub quantity: &'static str,
    pub condition: Condition,
    pub source: &'static str,
    pub outcome: Result<EstimationResult, String>,
}

impl EstimateRow {
    fn csv(&self) -> String {
        match &self.outcome {
            Ok(fit) => format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.quantity,
                condition_code(self.condition),
                self.source,
                fmt_float(fit.estimate),
                fmt_float(fit.std_error),
                fit.n_used,
                fit.n_dropped,
                fit.converged,
                fit.iterations,
                fmt_float(fit.objective_at_optimum),
                fit.warning.clone().unwrap_or_default(),
            ),
            Err(reason) => format!(
                "{},{},{},,,,,,,,skipped: {reason}",
                self.quantity,
                condition_code(self.condition),
                self.source
            ),
        }
    }
}

/// Runs a fit, turning insufficient-data failures into skip notes while
/// letting numerical failures propagate.
fn attempt(
    fit: Result<EstimationResult, EstimateError>,
) -> Result<Result<EstimationResult, String>, CliError> {
    match fit {
        Ok(result) => Ok(Ok(result)),
        Err(e @ EstimateError::InsufficientData { .. }) => Ok(Err(e.to_string())),
        Err(other) => Err(other.into()),
    }
}

pub struct EstimateOutputs {
    pub rows: Vec<EstimateRow>,
    pub rate_regressions: Vec<(Condition, Result<RegressionFit, String>)>,
    pub logit: Option<Result<RegressionFit, String>>,
}

fn subject_rate_rows(
    panel: &Panel,
    tables: &RateTables,
    condition: Condition,
) -> Vec<(f64, Covariates)> {
    let covariates: BTreeMap<SubjectKey, Covariates> = panel
        .by_subject()
        .into_iter()
        .map(|(key, records)| (key, records[0].covariates))
        .collect();
    let mut rows = Vec::new();
    for (key, cov) in &covariates {
        if let Some(cell) = tables.by_subject.get(&(key.clone(), condition)) {
            if cell.n > 0 {
                rows.push((cell.rate(), *cov));
            }
        }
    }
    rows
}

fn write_estimates(artifacts: &mut Artifacts, panel: &Panel) -> Result<EstimateOutputs, CliError> {
    let config = artifacts.config;
    let stake = config.sim.stake;
    let winsorize = config.winsorize;

    let c_ind = attempt(fit_c_ols(panel, Condition::Individual, winsorize))?;
    let c_soc = attempt(fit_c_ols(panel, Condition::Social, winsorize))?;
    // The neighbor-precision fit holds the exponent at the individual-
    // condition estimate: that is the clean measurement of how the subject
    // updates, while the social-condition slope is attenuated by the
    // rational-neighbor reading of the guess.
    let beta_tilde = match &c_ind {
        Ok(c_fit) => attempt(fit_beta_tilde_nls(
            panel,
            c_fit.estimate,
            stake,
            &NlsOptions {
                include_bot: config.include_bot_nls,
                winsorize,
                ..NlsOptions::default()
            },
        ))?,
        Err(_) => Err("individual exponent unavailable".to_string()),
    };

    let mut rows = vec![
        EstimateRow {
            quantity: "c",
            condition: Condition::Individual,
            source: "reported",
            outcome: c_ind,
        },
        EstimateRow {
            quantity: "c",
            condition: Condition::Social,
            source: "reported",
            outcome: c_soc,
        },
    ];
    for condition in [Condition::Individual, Condition::Social] {
        for (source, label) in [
            (PosteriorSource::Reported, "reported"),
            (PosteriorSource::Bayesian, "bayes"),
        ] {
            rows.push(EstimateRow {
                quantity: "beta",
                condition,
                source: label,
                outcome: attempt(fit_beta_logit(panel, condition, source, stake))?,
            });
        }
    }
    rows.push(EstimateRow {
        quantity: "beta_tilde",
        condition: Condition::Social,
        source: "reported",
        outcome: beta_tilde,
    });

    let csv_rows: Vec<String> = rows.iter().map(EstimateRow::csv).collect();
    artifacts.write_csv(
        "estimates.csv",
        "quantity,condition,source,estimate,std_error,n_used,n_dropped,converged,iterations,objective,note",
        &csv_rows,
    )?;

    // Subject-level rate regressions, one per condition.
    let options = ClassifyOptions {
        tie_rule: config.tie_rule,
    };
    let tables = rate_tables(panel, &options)?;
    let mut rate_regressions = Vec::new();
    let mut regression_rows: Vec<String> = Vec::new();
    for condition in [Condition::Individual, Condition::Social] {
        let data = subject_rate_rows(panel, &tables, condition);
        let outcome = match fit_subject_ols(&data) {
            Ok(fit) => Ok(fit),
            Err(e @ (EstimateError::InsufficientData { .. } | EstimateError::BadInput(_))) => {
                Err(e.to_string())
            }
            Err(other) => return Err(other.into()),
        };
        match &outcome {
            Ok(fit) => {
                for (i, name) in fit.names.iter().enumerate() {
                    regression_rows.push(format!(
                        "{},{},{},{},{},{}",
                        condition_code(condition),
                        name,
                        fmt_float(fit.coefficients[i]),
                        fmt_float(fit.std_errors[i]),
                        fit.n,
                        fmt_float(fit.r_squared),
                    ));
                }
            }
            Err(reason) => {
                regression_rows.push(format!(
                    "{},,,,,skipped: {reason}",
                    condition_code(condition)
                ));
            }
        }
        rate_regressions.push((condition, outcome));
    }
    artifacts.write_csv(
        "regression_rates_ols.csv",
        "condition,term,coefficient,std_error,n,adj_r_squared",
        &regression_rows,
    )?;

    // Record-level irrationality logit over the arm that reveals neighbor
    // demographics; skipped when that arm is absent.
    let has_demo = panel
        .records()
        .iter()
        .any(|r| r.treatment == Some(Treatment::Demographics) && r.condition == Condition::Social);
    let logit = if has_demo {
        Some(match fit_irrationality_logit(panel, true) {
            Ok(fit) => Ok(fit),
            Err(e @ (EstimateError::InsufficientData { .. } | EstimateError::BadInput(_))) => {
                Err(e.to_string())
            }
            Err(other) => return Err(other.into()),
        })
    } else {
        None
    };
    if let Some(outcome) = &logit {
        let rows: Vec<String> = match outcome {
            Ok(fit) => {
                let ames = fit
                    .ames
                    .as_ref()
                    .expect("logistic fits carry marginal effects");
                fit.names
                    .iter()
                    .enumerate()
                    .map(|(i, name)| {
                        format!(
                            "{},{},{},{},{},{},{},",
                            name,
                            fmt_float(fit.coefficients[i]),
                            fmt_float(fit.std_errors[i]),
                            fmt_float(ames[i]),
                            fit.n,
                            fit.n_clusters.unwrap_or(0),
                            fmt_float(fit.r_squared),
                        )
                    })
                    .collect()
            }
            Err(reason) => vec![format!(",,,,,,,skipped: {reason}")],
        };
        artifacts.write_csv(
            "regression_irrationality_logit.csv",
            "term,coefficient,std_error,ame,n,n_clusters,pseudo_r_squared,note",
            &rows,
        )?;
    }

    Ok(EstimateOutputs {
        rows,
        rate_regressions,
        logit,
    })
}

fn write_curves(artifacts: &mut Artifacts, panel: &Panel) -> Result<Vec<String>, CliError> {
    let grid = default_grid();
    let mut files = Vec::new();
    for kind in [
        CurveKind::BeliefIndividual,
        CurveKind::BeliefSocial,
        CurveKind::ChoiceIndividual,
        CurveKind::ChoiceSocial,
    ] {
        let (xs, ys) = curve_inputs(panel, kind)?;
        if xs.is_empty() {
            continue;
        }
        let curve = kernel_regression(&xs, &ys, artifacts.config.bandwidth, &grid)?;
        let rows: Vec<String> = curve
            .grid
            .iter()
            .enumerate()
            .map(|(i, g)| {
                format!(
                    "{},{},{},{}",
                    fmt_float(*g),
                    curve.estimates[i].map(fmt_float).unwrap_or_default(),
                    curve.sd[i].map(fmt_float).unwrap_or_default(),
                    fmt_float(curve.n_effective[i]),
                )
            })
            .collect();
        let name = format!("curve_{}.csv", kind.name());
        artifacts.write_csv(&name, "grid,estimate,sd,n_effective", &rows)?;
        files.push(name);
    }
    Ok(files)
}

/// One row of the hypothesis-test battery.
pub struct BatteryRow {
    pub name: String,
    pub outcome: Result<TestResult, String>,
}

fn battery_push(
    rows: &mut Vec<BatteryRow>,
    name: impl Into<String>,
    result: Result<TestResult, crate::stats::StatsError>,
) {
    rows.push(BatteryRow {
        name: name.into(),
        outcome: result.map_err(|e| e.to_string()),
    });
}

/// The standard comparison battery: social vs individual error rates
/// (record counts, within-subject means, and whole distributions), the
/// error decomposition, and adjacent treatment gaps in social rounds.
pub fn test_battery(panel: &Panel, tables: &RateTables) -> Vec<BatteryRow> {
    let mut rows = Vec::new();
    let ind = tables
        .overall
        .get(&Condition::Individual)
        .copied()
        .unwrap_or_default();
    let soc = tables
        .overall
        .get(&Condition::Social)
        .copied()
        .unwrap_or_default();

    battery_push(
        &mut rows,
        "irrational_soc_vs_ind",
        two_prop_test(soc.irrational, soc.n, ind.irrational, ind.n),
    );
    battery_push(
        &mut rows,
        "posterior_error_soc_vs_ind",
        two_prop_test(soc.posterior_errors, soc.n, ind.posterior_errors, ind.n),
    );
    battery_push(
        &mut rows,
        "reasoning_error_soc_vs_ind",
        two_prop_test(soc.reasoning_errors, soc.n, ind.reasoning_errors, ind.n),
    );

    let mut soc_rates = Vec::new();
    let mut ind_rates = Vec::new();
    for key in panel.subjects() {
        let i = tables.by_subject.get(&(key.clone(), Condition::Individual));
        let s = tables.by_subject.get(&(key, Condition::Social));
        if let (Some(i), Some(s)) = (i, s) {
            if i.n > 0 && s.n > 0 {
                ind_rates.push(i.rate());
                soc_rates.push(s.rate());
            }
        }
    }
    battery_push(
        &mut rows,
        "irrational_rate_soc_vs_ind_paired",
        paired_rate_test(&soc_rates, &ind_rates),
    );
    battery_push(
        &mut rows,
        "irrational_rate_distribution_ad",
        anderson_darling_2(&soc_rates, &ind_rates, false),
    );

    for (a, b) in [
        (Treatment::Base, Treatment::Demographics),
        (Treatment::Demographics, Treatment::Bot),
        (Treatment::Bot, Treatment::Ball),
    ] {
        let cell_a = tables.by_treatment.get(&(a, Condition::Social));
        let cell_b = tables.by_treatment.get(&(b, Condition::Social));
        let name = format!(
            "social_irrational_{}_vs_{}",
            a.session_id().to_lowercase(),
            b.session_id().to_lowercase()
        );
        match (cell_a, cell_b) {
            (Some(a), Some(b)) => battery_push(
                &mut rows,
                name,
                two_prop_test(a.irrational, a.n, b.irrational, b.n),
            ),
            _ => rows.push(BatteryRow {
                name,
                outcome: Err("treatment arm absent".into()),
            }),
        }
    }

    let ball = tables
        .by_treatment
        .get(&(Treatment::Ball, Condition::Social));
    match ball {
        Some(ball) => battery_push(
            &mut rows,
            "social_irrational_ball_vs_individual",
            two_prop_test(ball.irrational, ball.n, ind.irrational, ind.n),
        ),
        None => rows.push(BatteryRow {
            name: "social_irrational_ball_vs_individual".into(),
            outcome: Err("treatment arm absent".into()),
        }),
    }

    rows
}

fn write_tests(artifacts: &mut Artifacts, panel: &Panel) -> Result<Vec<BatteryRow>, CliError> {
    let options = ClassifyOptions {
        tie_rule: artifacts.config.tie_rule,
    };
    let tables = rate_tables(panel, &options)?;
    let battery = test_battery(panel, &tables);
    let rows: Vec<String> = battery
        .iter()
        .map(|row| match &row.outcome {
            Ok(r) => format!(
                "{},{},{},{},{},{},{},",
                row.name,
                r.method.name(),
                fmt_float(r.statistic),
                fmt_float(r.p_value),
                r.n1,
                r.n2,
                r.degenerate,
            ),
            Err(reason) => format!("{},,,,,,,skipped: {reason}", row.name),
        })
        .collect();
    artifacts.write_csv(
        "tests.csv",
        "name,method,statistic,p_value,n1,n2,degenerate,note",
        &rows,
    )?;
    Ok(battery)
}

#[derive(Default)]
struct SummaryInputs {
    tables: Option<RateTables>,
    estimates: Option<EstimateOutputs>,
    curve_files: Vec<String>,
    battery: Option<Vec<BatteryRow>>,
}

fn fmt4(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        format!("{v:.4}")
    }
}

fn render_summary(config: &RunConfig, panel: &Panel, inputs: &SummaryInputs) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "observational-learning toolkit v{}",
        env!("CARGO_PKG_VERSION")
    );
    let _ = writeln!(s, "master seed: {}", config.sim.master_seed);
    let arms: Vec<String> = config
        .sim
        .treatments
        .iter()
        .map(|t| {
            format!(
                "{}={}",
                t.session_id(),
                config.sim.subjects.get(t).copied().unwrap_or(0)
            )
        })
        .collect();
    let _ = writeln!(
        s,
        "arms: {} (pool {}), {} rounds per condition, stake ${:.2}",
        arms.join(" "),
        config.sim.pool_size,
        config.sim.rounds_per_condition,
        config.sim.stake
    );
    let _ = writeln!(
        s,
        "panel: {} records from {} subjects",
        panel.len(),
        panel.subjects().len()
    );

    if let Some(tables) = &inputs.tables {
        let _ = writeln!(
            s,
            "\nerror rates (irrational = choice against the benchmark)"
        );
        for (condition, cell) in &tables.overall {
            let _ = writeln!(
                s,
                "  {}: rate {} (se {}), posterior {}, reasoning {}, n {}, excluded {}",
                condition_code(*condition),
                fmt4(cell.rate()),
                fmt4(cell.se()),
                fmt4(cell.posterior_error_rate()),
                fmt4(cell.reasoning_error_rate()),
                cell.n,
                cell.excluded
            );
        }
        let _ = writeln!(s, "\nsocial irrationality by arm");
        for ((treatment, condition), cell) in &tables.by_treatment {
            if *condition == Condition::Social {
                let _ = writeln!(
                    s,
                    "  {}: rate {} (n {})",
                    treatment.session_id(),
                    fmt4(cell.rate()),
                    cell.n
                );
            }
        }
    }

    if let Some(estimates) = &inputs.estimates {
        let _ = writeln!(s, "\nstructural estimates");
        for row in &estimates.rows {
            match &row.outcome {
                Ok(fit) => {
                    let _ = writeln!(
                        s,
                        "  {} ({}, {}): {} (se {}), n {}{}",
                        row.quantity,
                        condition_code(row.condition),
                        row.source,
                        fmt4(fit.estimate),
                        fmt4(fit.std_error),
                        fit.n_used,
                        fit.warning
                            .as_deref()
                            .map(|w| format!(" [{w}]"))
                            .unwrap_or_default()
                    );
                }
                Err(reason) => {
                    let _ = writeln!(
                        s,
                        "  {} ({}, {}): skipped: {reason}",
                        row.quantity,
                        condition_code(row.condition),
                        row.source
                    );
                }
            }
        }
        let highlighted = match config.posterior_source {
            PosteriorSource::Reported => "reported",
            PosteriorSource::Bayesian => "bayes",
        };
        let _ = writeln!(s, "  highlighted belief source: {highlighted}");

        for (condition, outcome) in &estimates.rate_regressions {
            match outcome {
                Ok(fit) => {
                    let _ = writeln!(
                        s,
                        "\n{} irrationality rate on demographics (n {}, adj R\u{b2} {})",
                        condition_code(*condition),
                        fit.n,
                        fmt4(fit.r_squared)
                    );
                    for (i, name) in fit.names.iter().enumerate() {
                        let _ = writeln!(
                            s,
                            "  {:<24} {:>10} (se {})",
                            name,
                            fmt4(fit.coefficients[i]),
                            fmt4(fit.std_errors[i])
                        );
                    }
                }
                Err(reason) => {
                    let _ = writeln!(
                        s,
                        "\n{} irrationality rate on demographics: skipped: {reason}",
                        condition_code(*condition)
                    );
                }
            }
        }
        match &estimates.logit {
            Some(Ok(fit)) => {
                let _ = writeln!(
                    s,
                    "\nirrationality logit, social rounds with revealed neighbor demographics \
(n {}, clusters {}, pseudo R\u{b2} {})",
                    fit.n,
                    fit.n_clusters.unwrap_or(0),
                    fmt4(fit.r_squared)
                );
                let ames = fit
                    .ames
                    .as_ref()
                    .expect("logistic fits carry marginal effects");
                for (i, name) in fit.names.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "  {:<24} {:>10} (se {}), ame {}",
                        name,
                        fmt4(fit.coefficients[i]),
                        fmt4(fit.std_errors[i]),
                        fmt4(ames[i])
                    );
                }
            }
            Some(Err(reason)) => {
                let _ = writeln!(s, "\nirrationality logit: skipped: {reason}");
            }
            None => {}
        }
    }

    if !inputs.curve_files.is_empty() {
        let _ = writeln!(
            s,
            "\nsmoothed curves (bandwidth {})",
            fmt4(config.bandwidth)
        );
        for file in &inputs.curve_files {
            let _ = writeln!(s, "  {file}");
        }
    }

    if let Some(battery) = &inputs.battery {
        let _ = writeln!(s, "\nhypothesis tests");
        for row in battery {
            match &row.outcome {
                Ok(r) => {
                    let _ = writeln!(
                        s,
                        "  {:<40} statistic {:>10}, p {}{}",
                        row.name,
                        fmt4(r.statistic),
                        fmt4(r.p_value),
                        if r.degenerate { " [degenerate]" } else { "" }
                    );
                }
                Err(reason) => {
                    let _ = writeln!(s, "  {:<40} skipped: {reason}", row.name);
                }
            }
        }
    }

    s
}
