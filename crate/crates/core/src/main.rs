use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wcrlab::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use wcrlab::Error;

#[derive(Parser)]
#[command(name = "wcrlab", version, about = "Sensitivity bounds, Wasserstein information and projection estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bias, variance and sensitivity of the uniform scale estimators across n.
    Figure1(RunArgs),
    /// Monte Carlo cosensitivity against the lower bound for a suite of cases.
    Bound(RunArgs),
    /// Fit a projection estimator to a sample file.
    Wpe(RunArgs),
    /// Solve a semi-discrete transport problem in the plane.
    Sdot(RunArgs),
    /// Sampling distribution of the projection estimator.
    Clt(RunArgs),
    /// n times the sensitivity of the projection estimator across n.
    WpeSweep(RunArgs),
    /// Run whatever experiment the config names.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created when missing.
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> wcrlab::Result<()> {
    let (expected, args) = match cli.command {
        Command::Figure1(a) => (Some(ExperimentKind::Figure1), a),
        Command::Bound(a) => (Some(ExperimentKind::Bound), a),
        Command::Wpe(a) => (Some(ExperimentKind::Wpe), a),
        Command::Sdot(a) => (Some(ExperimentKind::SdotDemo), a),
        Command::Clt(a) => (Some(ExperimentKind::Clt), a),
        Command::WpeSweep(a) => (Some(ExperimentKind::WpeSweep), a),
        Command::Run(a) => (None, a),
    };
    let config = ExperimentConfig::load(&args.config)?;
    if let Some(kind) = expected {
        if config.experiment != kind {
            return Err(Error::Config(format!(
                "config describes a `{}` experiment, not `{}`",
                config.experiment.name(),
                kind.name()
            )));
        }
    }
    let manifest = run_experiment(&config, &args.out)?;
    for path in &manifest.outputs {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
