use std::path::PathBuf;

use clap::Args;
use splinemotion::dataset::{read_obj, write_obj};

use crate::failure::{CmdResult, Failure};
use crate::outputs;
use crate::settings::{ensure_dir, log_line};

#[derive(Debug, Args)]
pub struct ReprojectArgs {
    /// Controls archive written by `fit`.
    #[arg(long)]
    pub controls: PathBuf,
    /// Output frame count (defaults to the source length).
    #[arg(long)]
    pub frames: Option<usize>,
    /// Output trajectory archive.
    #[arg(long)]
    pub out: PathBuf,
    /// Rest-pose OBJ; with --obj-dir, writes `V₀ + Δ̂_t` as one OBJ per frame.
    #[arg(long, requires = "obj_dir")]
    pub base_mesh: Option<PathBuf>,
    #[arg(long, requires = "base_mesh")]
    pub obj_dir: Option<PathBuf>,
}

pub fn run(args: ReprojectArgs) -> CmdResult {
    let source = outputs::read(&args.controls)?;
    let controls = source.to_controls()?;
    let frames = match args.frames.or(controls.source_frames()) {
        Some(0) => return Err(Failure::usage("--frames must be positive")),
        Some(t) => t,
        None => {
            return Err(Failure::usage(
                "controls archive has no source frame count; pass --frames",
            ))
        }
    };
    let archive = outputs::reprojection_archive(&controls, frames, &source.metadata)?;
    outputs::write(&args.out, &archive)?;

    if let (Some(base), Some(dir)) = (&args.base_mesh, &args.obj_dir) {
        let mesh = read_obj(base)?;
        if mesh.vertices.len() != controls.points() {
            return Err(Failure::data(format!(
                "base mesh has {} vertices, controls cover {} points",
                mesh.vertices.len(),
                controls.points()
            )));
        }
        ensure_dir(dir)?;
        let traj = archive.to_trajectory()?;
        for t in 0..frames {
            let verts: Vec<[f64; 3]> = mesh
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let d = traj.get(t, i);
                    [v[0] + d[0], v[1] + d[1], v[2] + d[2]]
                })
                .collect();
            write_obj(dir.join(format!("frame_{t:04}.obj")), &verts, &mesh.faces)?;
        }
    }
    log_line(
        "reproject",
        &[
            ("controls", &args.controls.display()),
            ("k", &controls.controls()),
            ("n", &controls.points()),
            ("T", &frames),
            ("out", &args.out.display()),
        ],
    );
    Ok(())
}
