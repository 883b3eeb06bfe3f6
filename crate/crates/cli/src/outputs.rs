//! Archive construction shared by several commands.

use std::path::Path;

use splinemotion::archive::{read_archive_with, write_archive, Archive, ArchiveMetadata};
use splinemotion::solver;
use splinemotion::{ControlGrid, RunConfig};

use crate::failure::{CmdResult, Failure};

/// Stamps provenance fields onto freshly built archive metadata.
pub fn stamp(meta: &mut ArchiveMetadata, config: &RunConfig, normalization: Option<[f64; 2]>) {
    meta.seed = Some(config.seed);
    meta.mu = Some(config.mu);
    meta.config = Some(config.to_json());
    meta.normalization = normalization;
}

/// Reprojection of stored controls, carrying the provenance of `source`.
pub fn reprojection_archive(controls: &ControlGrid, frames: usize, source: &ArchiveMetadata) -> CmdResult<Archive> {
    let traj = solver::reproject(controls, frames)?;
    let mut archive = Archive::from_trajectory(&traj);
    let meta = &mut archive.metadata;
    meta.degree = Some(controls.degree());
    meta.source_frames = controls.source_frames();
    meta.seed = source.seed;
    meta.mu = source.mu;
    meta.config = source.config.clone();
    meta.normalization = source.normalization;
    Ok(archive)
}

pub fn write(path: &Path, archive: &Archive) -> CmdResult {
    write_archive(path, archive).map_err(Failure::from)
}

pub fn read(path: &Path) -> CmdResult<Archive> {
    read_archive_with(path, true).map_err(Failure::from)
}
