use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use splinemotion::archive::Archive;
use splinemotion::dataset::{DatasetManifest, ManifestEntry};
use splinemotion::{metrics, Fitter, RunConfig};

use crate::failure::{CmdResult, Failure};
use crate::outputs;
use crate::settings::{ensure_dir, file_stem, log_line, RunArgs};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for `<id>.controls.bsma` archives.
    #[arg(long)]
    pub out: PathBuf,
    /// Fail the whole batch on the first bad sequence.
    #[arg(long)]
    pub strict: bool,
    /// Also write `<id>.reprojected.bsma` at the source frame count.
    #[arg(long)]
    pub reproject: bool,
    /// Keep raw coordinates instead of normalizing into the manifest box.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

struct Fitted {
    frames: usize,
    points: usize,
    residual: f64,
    stationarity: f64,
}

pub fn load_manifest(path: &std::path::Path) -> CmdResult<DatasetManifest> {
    let manifest = DatasetManifest::load(path)?;
    if manifest.entries.is_empty() {
        return Err(Failure::data(format!("manifest {} has no sequences", path.display())));
    }
    Ok(manifest)
}

/// Entries sorted by id, so logs and reports have a stable order.
pub fn sorted_entries(manifest: &DatasetManifest) -> Vec<&ManifestEntry> {
    let mut entries: Vec<_> = manifest.entries.iter().collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    entries
}

fn fit_one(
    args: &FitArgs,
    config: &RunConfig,
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    fitter: &Fitter,
) -> CmdResult<Fitted> {
    let stem = file_stem(&entry.id)?;
    let mesh = manifest.load_entry(entry, !args.raw)?;
    let controls = fitter.fit(&mesh.deltas)?;
    let stationarity = if mesh.frames() > 1 {
        fitter
            .operator(mesh.frames())?
            .stationarity_residual(&mesh.deltas, &controls)?
    } else {
        0.0
    };

    let mut archive = Archive::from_controls(&controls);
    let normalization = (!args.raw).then_some(manifest.normalization);
    outputs::stamp(&mut archive.metadata, config, normalization);
    outputs::write(&args.out.join(format!("{stem}.controls.bsma")), &archive)?;

    // Measure against what was stored, not the unrounded fit.
    let stored = archive.to_controls()?;
    let recon = outputs::reprojection_archive(&stored, mesh.frames(), &archive.metadata)?;
    let residual = metrics::mean_l1_error(&recon.to_trajectory()?, &mesh.deltas)?;
    if args.reproject {
        outputs::write(&args.out.join(format!("{stem}.reprojected.bsma")), &recon)?;
    }
    Ok(Fitted {
        frames: mesh.frames(),
        points: mesh.base_vertices.len(),
        residual,
        stationarity,
    })
}

pub fn run(args: FitArgs) -> CmdResult {
    let config = args.run.resolve()?;
    let manifest = load_manifest(&args.manifest)?;
    ensure_dir(&args.out)?;
    let fitter = Fitter::new(config.k, config.degree, config.mu);
    let entries = sorted_entries(&manifest);

    let results: Vec<(CmdResult<Fitted>, f64)> = entries
        .par_iter()
        .map(|entry| {
            let start = Instant::now();
            let r = fit_one(&args, &config, &manifest, entry, &fitter);
            (r, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect();

    let mut first_failure = None;
    let mut written = 0;
    for (entry, (result, wall_ms)) in entries.iter().zip(results) {
        match result {
            Ok(f) => {
                written += 1;
                log_line(
                    "fit",
                    &[
                        ("id", &entry.id),
                        ("status", &"ok"),
                        ("T", &f.frames),
                        ("n", &f.points),
                        ("k", &config.k),
                        ("residual", &format!("{:.6e}", f.residual)),
                        ("stationarity", &format!("{:.3e}", f.stationarity)),
                        ("wall_ms", &format!("{wall_ms:.3}")),
                    ],
                );
            }
            Err(e) => {
                log_line(
                    "fit",
                    &[
                        ("id", &entry.id),
                        ("status", &"error"),
                        ("exit", &e.code()),
                        ("error", &e),
                    ],
                );
                first_failure.get_or_insert(e.context(format!("sequence {}", entry.id)));
            }
        }
    }
    log_line(
        "fit",
        &[
            ("summary", &"done"),
            ("written", &written),
            ("failed", &(entries.len() - written)),
        ],
    );
    match first_failure {
        Some(e) if args.strict || written == 0 => Err(e),
        _ => Ok(()),
    }
}
