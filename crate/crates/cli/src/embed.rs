use std::path::PathBuf;

use clap::Args;
use splinemotion::archive::Archive;
use splinemotion::embedding::{EmbeddingBasis, LevelSchedule};

use crate::failure::{CmdResult, Failure};
use crate::outputs;
use crate::settings::{log_line, RunArgs};

/// Largest relative round-trip error `--verify` accepts.
const VERIFY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Controls archive written by `fit`.
    #[arg(long)]
    pub controls: PathBuf,
    /// Output embedding archive.
    #[arg(long)]
    pub out: PathBuf,
    /// Reconstruct the controls and report the round-trip error.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn run(args: EmbedArgs) -> CmdResult {
    let config = args.run.resolve()?;
    let source = outputs::read(&args.controls)?;
    let controls = source.to_controls()?;
    let schedule = LevelSchedule::new(config.schedule.clone(), config.t_prime, controls.degree())
        .map_err(|e| Failure::Usage(e.into()))?;
    if controls.controls() > schedule.finest() {
        return Err(Failure::usage(format!(
            "{} control points do not fit the finest schedule level {}",
            controls.controls(),
            schedule.finest()
        )));
    }
    let padded = controls.pad_to(schedule.finest())?;
    let basis = EmbeddingBasis::new(schedule, config.mu)?;
    let stack = basis.embed(&padded)?;

    let mut archive = Archive::from_embedding(&stack, config.mu);
    outputs::stamp(&mut archive.metadata, &config, source.metadata.normalization);
    archive.metadata.source_frames = controls.source_frames();
    outputs::write(&args.out, &archive)?;

    let mut fields: Vec<(&str, String)> = vec![
        ("controls", args.controls.display().to_string()),
        ("k", controls.controls().to_string()),
        ("padded", padded.controls().to_string()),
        ("residuals", stack.levels().to_string()),
        ("blocks", (stack.levels() + 1).to_string()),
        ("rows", stack.schedule().total_rows().to_string()),
    ];
    let mut verdict = Ok(());
    if args.verify {
        let back = basis.reconstruct(&stack)?;
        let (mut max_abs, mut err2, mut norm2) = (0.0f64, 0.0, 0.0);
        for (a, b) in back.as_slice().iter().zip(padded.as_slice()) {
            max_abs = max_abs.max((a - b).abs());
            err2 += (a - b) * (a - b);
            norm2 += b * b;
        }
        let rel = if norm2 > 0.0 {
            (err2 / norm2).sqrt()
        } else {
            err2.sqrt()
        };
        fields.push(("verify_max_abs", format!("{max_abs:.3e}")));
        fields.push(("verify_rel", format!("{rel:.3e}")));
        if !(rel <= VERIFY_TOLERANCE) {
            verdict = Err(Failure::Numerical(anyhow::anyhow!(
                "embedding round trip error {rel:.3e} exceeds {VERIFY_TOLERANCE:e}"
            )));
        }
    }
    let shown: Vec<(&str, &dyn std::fmt::Display)> =
        fields.iter().map(|(k, v)| (*k, v as &dyn std::fmt::Display)).collect();
    log_line("embed", &shown);
    verdict
}
