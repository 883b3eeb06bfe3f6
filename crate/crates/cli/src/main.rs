//! `splinemotion`: batch fitting, reprojection, embedding, sampling and
//! evaluation of mesh-motion B-spline control grids.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod bench;
mod compare;
mod embed;
mod failure;
mod fit;
mod outputs;
mod reproject;
mod sample;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "splinemotion",
    version,
    about = "Fixed-size B-spline control grids for mesh motion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit every sequence of a manifest to a control grid.
    Fit(fit::FitArgs),
    /// Evaluate a control grid at any frame count.
    Reproject(reproject::ReprojectArgs),
    /// Compare B-spline, ridge and linear reconstructions.
    Compare(compare::CompareArgs),
    /// Encode a control grid as a multi-level embedding.
    Embed(embed::EmbedArgs),
    /// Draw area-uniform surface samples from rest meshes.
    Sample(sample::SampleArgs),
    /// Time operator build and fit on synthetic data.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Reproject(a) => reproject::run(a),
        Command::Compare(a) => compare::run(a),
        Command::Embed(a) => embed::run(a),
        Command::Sample(a) => sample::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
