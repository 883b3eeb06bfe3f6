use std::path::PathBuf;

use clap::Args;
use splinemotion::archive::Archive;
use splinemotion::sampling::{sample_surface, SampledSurface};
use splinemotion::ControlGrid;

use crate::failure::{CmdResult, Failure};
use crate::fit::{load_manifest, sorted_entries};
use crate::outputs;
use crate::settings::{ensure_dir, file_stem, log_line, RunArgs};

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Sequence to sample (default: every entry).
    #[arg(long)]
    pub id: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Split the samples into shuffled shards of this many points.
    #[arg(long)]
    pub shard: Option<usize>,
    /// Also transfer the per-vertex displacements to every sample.
    #[arg(long)]
    pub with_deltas: bool,
    /// Controls archive (per vertex) to transfer to the samples.
    #[arg(long)]
    pub controls: Option<PathBuf>,
    /// Keep raw coordinates instead of normalizing into the manifest box.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn run(args: SampleArgs) -> CmdResult {
    let config = args.run.resolve()?;
    if config.samples == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    if args.shard == Some(0) {
        return Err(Failure::usage("--shard must be positive"));
    }
    let manifest = load_manifest(&args.manifest)?;
    let entries: Vec<_> = match &args.id {
        Some(id) => vec![manifest
            .entry(id)
            .ok_or_else(|| Failure::data(format!("no sequence {id:?} in {}", args.manifest.display())))?],
        None => sorted_entries(&manifest),
    };
    let controls: Option<ControlGrid> = match &args.controls {
        Some(p) => Some(outputs::read(p)?.to_controls()?),
        None => None,
    };
    ensure_dir(&args.out)?;
    let normalization = (!args.raw).then_some(manifest.normalization);

    for entry in entries {
        let stem = file_stem(&entry.id)?;
        let mesh = manifest.load_entry(entry, !args.raw)?;
        let surface = sample_surface(&mesh, config.samples, config.seed)?;
        let parts: Vec<(String, SampledSurface)> = match args.shard {
            Some(size) => surface
                .shards(size, config.seed)?
                .into_iter()
                .enumerate()
                .map(|(i, s)| (format!(".{i:03}"), s))
                .collect(),
            None => vec![(String::new(), surface)],
        };
        for (suffix, part) in &parts {
            let mut archive = Archive::from_surface(part);
            outputs::stamp(&mut archive.metadata, &config, normalization);
            outputs::write(&args.out.join(format!("{stem}.surface{suffix}.bsma")), &archive)?;
            if args.with_deltas {
                let mut a = Archive::from_trajectory(&part.interpolate_trajectory(&mesh.deltas)?);
                outputs::stamp(&mut a.metadata, &config, normalization);
                outputs::write(&args.out.join(format!("{stem}.deltas{suffix}.bsma")), &a)?;
            }
            if let Some(c) = &controls {
                let mut a = Archive::from_controls(&part.interpolate_controls(c)?);
                outputs::stamp(&mut a.metadata, &config, normalization);
                outputs::write(&args.out.join(format!("{stem}.controls{suffix}.bsma")), &a)?;
            }
        }
        log_line(
            "sample",
            &[
                ("id", &entry.id),
                ("vertices", &mesh.base_vertices.len()),
                ("faces", &mesh.faces.len()),
                ("samples", &config.samples),
                ("seed", &config.seed),
                ("files", &parts.len()),
            ],
        );
    }
    Ok(())
}
