use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use splinemotion::timing::{bench_fit, FitTiming};

use crate::failure::{CmdResult, Failure};
use crate::settings::{log_line, RunArgs};

/// Wall-time budget for operator build plus fit.
const BUDGET_MS: f64 = 1000.0;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Frames of the synthetic sequence.
    #[arg(long, default_value_t = 200)]
    pub frames: usize,
    /// Points of the synthetic sequence.
    #[arg(long, default_value_t = 50_000)]
    pub points: usize,
    /// Extra fits that reuse the cached operator.
    #[arg(long, default_value_t = 2)]
    pub repeat: usize,
    /// JSON report path; without it only the log line is emitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Serialize)]
struct Report {
    #[serde(flatten)]
    timing: FitTiming,
    total_ms: f64,
    budget_ms: f64,
    within_budget: bool,
    config: serde_json::Value,
}

pub fn run(args: BenchArgs) -> CmdResult {
    let config = args.run.resolve()?;
    if args.frames == 0 || args.points == 0 {
        return Err(Failure::usage("--frames and --points must be positive"));
    }
    let timing = bench_fit(
        args.frames,
        args.points,
        config.k,
        config.degree,
        config.mu,
        config.seed,
        args.repeat,
    )?;
    let total_ms = timing.total_ms();
    log_line(
        "bench",
        &[
            ("T", &args.frames),
            ("n", &args.points),
            ("k", &config.k),
            ("operator_ms", &format!("{:.3}", timing.operator_ms)),
            ("fit_ms", &format!("{:.3}", timing.fit_ms)),
            ("cached_operator_ms", &format!("{:.4}", timing.cached_operator_ms)),
            ("total_ms", &format!("{total_ms:.3}")),
            ("budget_ms", &BUDGET_MS),
        ],
    );
    let report = Report {
        timing,
        total_ms,
        budget_ms: BUDGET_MS,
        within_budget: total_ms <= BUDGET_MS,
        config: config.to_json(),
    };
    let Some(path) = &args.out else { return Ok(()) };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Data(e.into()))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}
