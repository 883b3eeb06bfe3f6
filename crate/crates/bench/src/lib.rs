//! Fixtures shared by the criterion benchmarks.

use splinemotion::sampling::MeshSequence;
use splinemotion::synthetic::{self, BandLimited};
use splinemotion::TrajectoryGrid;

pub const SEED: u64 = 0x5eed;

pub fn trajectory(frames: usize, points: usize) -> TrajectoryGrid {
    BandLimited::default()
        .trajectory(frames, points, SEED)
        .expect("valid synthetic size")
}

pub fn mesh(frames: usize, vertices: usize) -> MeshSequence {
    synthetic::mesh_sequence(frames, vertices, SEED, BandLimited::default()).expect("valid synthetic size")
}

/// Rest positions of a generated sheet, jittered out of plane.
pub fn cloud(points: usize) -> Vec<[f64; 3]> {
    let m = mesh(2, points);
    m.base_vertices
        .iter()
        .enumerate()
        .map(|(i, p)| [p[0], p[1], ((i * 7919) % 101) as f64 * 1e-3])
        .collect()
}
