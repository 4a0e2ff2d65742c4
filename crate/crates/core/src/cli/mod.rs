//! Command-line plumbing: run configuration, panel CSV input/output, and the
//! subcommand pipelines that chain simulation, classification, estimation,
//! smoothing, and testing into reproducible report directories.

pub mod config;
pub mod io;
pub mod report;

use crate::classify::{ClassifyError, TieRule};
use crate::env::EnvError;
use crate::estimate::kernel::DEFAULT_BANDWIDTH;
use crate::estimate::{EstimateError, PosteriorSource};
use crate::sim::{SimConfig, SimError};
use crate::stats::StatsError;
use std::path::PathBuf;
use thiserror::Error;

/// The pipelines a run can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    /// Generate a panel (and its neighbor pool) and write them as CSV.
    Simulate,
    /// Tabulate error rates across every cut.
    Classify,
    /// Fit the structural parameters and the covariate regressions.
    Estimate,
    /// Smooth the belief and choice curves.
    Kernel,
    /// Run the hypothesis-test battery.
    Test,
    /// Everything above plus a plain-text summary.
    Report,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Classify => "classify",
            Subcommand::Estimate => "estimate",
            Subcommand::Kernel => "kernel",
            Subcommand::Test => "test",
            Subcommand::Report => "report",
        }
    }
}

/// Which sections the `report` subcommand emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportSections {
    pub rates: bool,
    pub estimates: bool,
    pub curves: bool,
    pub tests: bool,
}

impl Default for ReportSections {
    fn default() -> Self {
        ReportSections {
            rates: true,
            estimates: true,
            curves: true,
            tests: true,
        }
    }
}

/// Everything a pipeline run needs: the simulation configuration plus
/// output placement and analysis knobs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sim: SimConfig,
    /// Directory all artifacts are written into (created if absent).
    pub out_dir: PathBuf,
    /// Analyze this panel CSV instead of simulating one.
    pub panel_path: Option<PathBuf>,
    /// Kernel bandwidth on the percent scale.
    pub bandwidth: f64,
    /// Belief source highlighted in the summary (all sources are always
    /// estimated).
    pub posterior_source: PosteriorSource,
    /// Winsorize 0/100 reports to 1/99 in the estimations that would
    /// otherwise drop them.
    pub winsorize: bool,
    /// Include bot-treatment rounds in the neighbor-precision fit.
    pub include_bot_nls: bool,
    /// How a 50/50 report counts when decomposing an irrational choice.
    pub tie_rule: TieRule,
    pub sections: ReportSections,
    /// 0 quiet, 1 progress lines on stderr.
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sim: SimConfig::default(),
            out_dir: PathBuf::from("out"),
            panel_path: None,
            bandwidth: DEFAULT_BANDWIDTH,
            posterior_source: PosteriorSource::Reported,
            winsorize: false,
            include_bot_nls: false,
            tie_rule: TieRule::default(),
            sections: ReportSections::default(),
            verbosity: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.bandwidth.is_finite() || self.bandwidth <= 0.0 {
            return Err(CliError::Config(format!(
                "bandwidth {} must be positive",
                self.bandwidth
            )));
        }
        self.sim.validate()?;
        Ok(())
    }
}

/// Any pipeline failure, carved up by exit code: configuration problems
/// exit 2, data problems 3, numerical failures 4.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BadConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::NonConvergence(_)
            | EstimateError::RankDeficient
            | EstimateError::Separation => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Executes a subcommand, writing its artifacts under the configured
/// output directory.
pub fn run(subcommand: Subcommand, config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    report::run(subcommand, config)
}
