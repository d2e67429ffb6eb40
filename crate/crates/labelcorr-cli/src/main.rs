//! Command-line front end for the label-correction toolkit.
//!
//! The subcommands chain into a pipeline: `synth-gen` draws a mixture
//! dataset with exact ground truth, `inject-noise` corrupts its labels
//! through a transition matrix, `fit-tsybakov` fits the margin-condition
//! constants, `lrt-correct` runs likelihood-ratio correction, `eval-bounds`
//! compares closed-form error bounds against their empirical counterparts,
//! `adacorr` trains a small network with adaptive correction, and `report`
//! turns the resulting documents into tables and plot data.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors.
//! Randomness always comes from explicit `--seed` values and outputs are
//! written atomically, so identical invocations produce identical bytes.

mod commands;
mod config;
mod io;
mod model;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::io::UsageError;

#[derive(Parser)]
#[command(
    name = "labelcorr",
    version,
    about = "Error-bounded correction of noisy labels",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian-mixture dataset with clean and Bayes labels.
    SynthGen(commands::synth_gen::Args),
    /// Corrupt clean labels through a transition matrix.
    InjectNoise(commands::inject_noise::Args),
    /// Fit the margin-condition constants C and lambda on a dataset.
    FitTsybakov(commands::fit_tsybakov::Args),
    /// Correct labels with the likelihood-ratio test.
    LrtCorrect(commands::lrt_correct::Args),
    /// Evaluate closed-form bounds against empirical error rates.
    EvalBounds(commands::eval_bounds::Args),
    /// Train a small network with adaptive label correction.
    Adacorr(commands::adacorr::Args),
    /// Summarize results documents as tables and plot data.
    Report(commands::report::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SynthGen(args) => commands::synth_gen::run(args),
        Command::InjectNoise(args) => commands::inject_noise::run(args),
        Command::FitTsybakov(args) => commands::fit_tsybakov::run(args),
        Command::LrtCorrect(args) => commands::lrt_correct::run(args),
        Command::EvalBounds(args) => commands::eval_bounds::run(args),
        Command::Adacorr(args) => commands::adacorr::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if err.is::<UsageError>() => {
            eprintln!("usage error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
