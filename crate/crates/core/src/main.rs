//! Binary entry point: argument parsing and exit-code mapping around the
//! library's pipeline runner.

use clap::{Arg, ArgAction, ArgMatches, Command};
use oblearn::cli::{self, config as run_config, CliError, RunConfig, Subcommand};
use oblearn::estimate::PosteriorSource;
use std::path::PathBuf;

fn pipeline_args(command: Command) -> Command {
    command
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("Run configuration file (flat key = value lines)"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("N")
                .value_parser(clap::value_parser!(u64))
                .help("Master seed (overrides the configured one)"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .help("Directory artifacts are written into (default: out)"),
        )
        .arg(
            Arg::new("bandwidth")
                .long("bandwidth")
                .value_name("F")
                .value_parser(clap::value_parser!(f64))
                .help("Kernel bandwidth on the percent scale (default: 15)"),
        )
        .arg(
            Arg::new("posterior-source")
                .long("posterior-source")
                .value_name("SOURCE")
                .value_parser(["reported", "bayes"])
                .help("Belief source highlighted in the summary"),
        )
        .arg(
            Arg::new("winsorize")
                .long("winsorize")
                .action(ArgAction::SetTrue)
                .help("Pull 0/100 belief reports to 1/99 instead of dropping them"),
        )
        .arg(
            Arg::new("include-bot-nls")
                .long("include-bot-nls")
                .action(ArgAction::SetTrue)
                .help("Include bot-treatment rounds in the neighbor-precision fit"),
        )
        .arg(
            Arg::new("panel")
                .value_name("PANEL")
                .help("Analyze this panel CSV instead of simulating one"),
        )
}

fn build_command() -> Command {
    let about = "Simulation and estimation toolkit for two-stage decisions \
from private signals and observed choices";
    let mut command = Command::new("oblearn")
        .version(env!("CARGO_PKG_VERSION"))
        .about(about)
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, help) in [
        (
            "simulate",
            "Generate a synthetic panel and neighbor pool as CSV",
        ),
        ("classify", "Tabulate irrationality rates across every cut"),
        (
            "estimate",
            "Fit the structural parameters and covariate regressions",
        ),
        ("kernel", "Smooth the belief and choice curves"),
        ("test", "Run the hypothesis-test battery"),
        ("report", "All of the above plus a plain-text summary"),
    ] {
        command = command.subcommand(pipeline_args(Command::new(name).about(help)));
    }
    command
}

fn configure(matches: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut config = match matches.get_one::<String>("config") {
        Some(path) => run_config::load(std::path::Path::new(path))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = matches.get_one::<u64>("seed") {
        config.sim.master_seed = *seed;
    }
    if let Some(out) = matches.get_one::<String>("out") {
        config.out_dir = PathBuf::from(out);
    }
    if let Some(bandwidth) = matches.get_one::<f64>("bandwidth") {
        config.bandwidth = *bandwidth;
    }
    if let Some(source) = matches.get_one::<String>("posterior-source") {
        config.posterior_source = match source.as_str() {
            "bayes" => PosteriorSource::Bayesian,
            _ => PosteriorSource::Reported,
        };
    }
    if matches.get_flag("winsorize") {
        config.winsorize = true;
    }
    if matches.get_flag("include-bot-nls") {
        config.include_bot_nls = true;
    }
    if let Some(panel) = matches.get_one::<String>("panel") {
        config.panel_path = Some(PathBuf::from(panel));
    }
    Ok(config)
}

fn main() {
    let matches = build_command().get_matches();
    let (name, sub_matches) = matches.subcommand().expect("subcommand required");
    let subcommand = match name {
        "simulate" => Subcommand::Simulate,
        "classify" => Subcommand::Classify,
        "estimate" => Subcommand::Estimate,
        "kernel" => Subcommand::Kernel,
        "test" => Subcommand::Test,
        "report" => Subcommand::Report,
        _ => unreachable!("clap restricts subcommands"),
    };
    let outcome = configure(sub_matches).and_then(|config| cli::run(subcommand, &config));
    if let Err(error) = outcome {
        eprintln!("oblearn {name}: {error}");
        std::process::exit(error.exit_code());
    }
}
