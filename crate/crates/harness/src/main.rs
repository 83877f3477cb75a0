use anyhow::Result;
use apint_harness::experiments::ExperimentName;
use apint_harness::params::Flags;
use apint_harness::run_experiment;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "apint", version, about = "Averaged Parareal experiments for the rotating shallow water equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Command {
    /// Parareal iterations to tolerance against the averaging window.
    IterationsVsWindow(Flags),
    /// Serial coarse error against the averaging window.
    CoarseErrorVsWindow(Flags),
    /// Parareal error after three iterations against the averaging window.
    IterativeErrorVsWindow(Flags),
    /// Measured and predicted optimal windows, with fitted constants.
    OptimalWindowPrediction(Flags),
    /// Averaging error over one slab, isolated from time-stepping error.
    AveragingOracle(Flags),
    /// Every experiment in turn.
    All(Flags),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (names, flags): (Vec<ExperimentName>, Flags) = match Cli::parse().command {
        Command::IterationsVsWindow(f) => (vec![ExperimentName::IterationsVsWindow], f),
        Command::CoarseErrorVsWindow(f) => (vec![ExperimentName::CoarseErrorVsWindow], f),
        Command::IterativeErrorVsWindow(f) => (vec![ExperimentName::IterativeErrorVsWindow], f),
        Command::OptimalWindowPrediction(f) => (vec![ExperimentName::OptimalWindowPrediction], f),
        Command::AveragingOracle(f) => (vec![ExperimentName::AveragingOracle], f),
        Command::All(f) => (ExperimentName::ALL.to_vec(), f),
    };
    let params = flags.resolve()?;
    for name in names {
        let out = run_experiment(name, &params)?;
        println!("{}", out.csv.display());
    }
    Ok(())
}
