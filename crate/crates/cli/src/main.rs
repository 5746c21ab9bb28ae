//! `wildfire`: train, evaluate and run the hotspot/wildfire pipeline from the shell.
//!
//! Exit status is 0 on success, 1 when the flags or config are invalid and
//! 2 when a stage fails at runtime.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, Invalid, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "wildfire",
    version,
    about = "Wildfire hotspot prediction, detection and drone dispatch"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Generate a labeled dataset, a synthetic scene and a run config for it.
    Synth,
    /// Align and mask parameter layers into grid.json.
    Ingest,
    /// Fit a random forest on labeled data into model.json.
    Train,
    /// Sweep n-estimators and max-depth over 1..=15 into sweep.csv.
    Tune,
    /// Held-out metrics, k-fold CV and the logistic baseline into evaluation.json.
    Evaluate,
    /// Classify every unmasked cell into targets.json and targets.csv.
    Classify,
    /// Size the drone effort for a target report into plan.json and plan.csv.
    Dispatch,
    /// Fly a dispatch plan with a simulated fleet into events.csv.
    Simulate,
    /// Train (if --data is given), classify, dispatch and simulate in one go.
    Pipeline,
}

fn run(cli: &Cli) -> anyhow::Result<String> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    if cli.flags.print_config {
        commands::print_config(&cfg)?;
    }
    match cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Ingest => commands::ingest(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Tune => commands::tune(&cfg),
        Command::Evaluate => commands::evaluate_cmd(&cfg),
        Command::Classify => commands::classify(&cfg),
        Command::Dispatch => commands::dispatch(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Pipeline => commands::run_pipeline(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) if e.downcast_ref::<Invalid>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
