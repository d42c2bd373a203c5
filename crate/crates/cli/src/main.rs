//! `sentq` — pipeline CLI for sentiment-driven daily trading experiments.
//!
//! Subcommand per pipeline stage so intermediates can be cached and tested
//! in isolation: synthetic data, tweet prep, feature building, classifier
//! training/CV/RFECV, Q-learning and backtests. Exit codes: 0 success,
//! 2 usage or configuration error, 1 runtime failure.

mod cmds;
mod util;

use clap::{Parser, Subcommand};

use cmds::data::{cmd_featurize, cmd_prep, cmd_synth, FeaturizeArgs, PrepArgs, SynthArgs};
use cmds::model::{cmd_cv, cmd_rfecv, cmd_train, CvArgs, RfecvArgs, TrainArgs};
use cmds::trade::{
    cmd_backtest, cmd_experiment, cmd_qtrain, cmd_report, BacktestArgs, ExperimentArgs,
    QtrainArgs, ReportArgs,
};
use util::CliError;

#[derive(Parser)]
#[command(
    name = "sentq",
    about = "Sentiment features, classifiers and a Q-learning trader over daily bars",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic market with a planted sentiment signal.
    Synth(SynthArgs),
    /// Filter, score and aggregate raw tweets into daily sentiment.
    Prep(PrepArgs),
    /// Build a labeled, normalized feature dataset from prices + sentiment.
    Featurize(FeaturizeArgs),
    /// Train a classifier (logreg, svm, or the technical-only baseline).
    Train(TrainArgs),
    /// Cross-validate the hyperparameter grid on the training slice.
    Cv(CvArgs),
    /// Recursive feature elimination with cross-validated scoring.
    Rfecv(RfecvArgs),
    /// Train the Q-learning trading agent.
    Qtrain(QtrainArgs),
    /// Run the strategy comparison over the test range.
    Backtest(BacktestArgs),
    /// Run the target x tweet-set x model accuracy matrix.
    Experiment(ExperimentArgs),
    /// Rebuild the comparison table and chart from saved equity curves.
    Report(ReportArgs),
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Prep(args) => cmd_prep(args),
        Command::Featurize(args) => cmd_featurize(args),
        Command::Train(args) => cmd_train(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Rfecv(args) => cmd_rfecv(args),
        Command::Qtrain(args) => cmd_qtrain(args),
        Command::Backtest(args) => cmd_backtest(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("sentq: {e}");
        std::process::exit(e.exit_code());
    }
}
