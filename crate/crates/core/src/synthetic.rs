//! Seeded band-limited motion generators for tests, benchmarks and the CLI.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::ObjMesh;
use crate::error::{Error, Result};
use crate::grid::TrajectoryGrid;
use crate::sampling::MeshSequence;

/// Parameters of a sum-of-sinusoids displacement field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimited {
    /// Number of sinusoidal components per coordinate.
    pub components: usize,
    /// Highest frequency in cycles over the whole sequence.
    pub max_cycles: f64,
    pub amplitude: f64,
}

impl Default for BandLimited {
    fn default() -> Self {
        Self {
            components: 4,
            max_cycles: 3.0,
            amplitude: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    freq: f64,
    phase: f64,
    amp: [f64; 3],
}

impl BandLimited {
    fn waves(&self, rng: &mut ChaCha8Rng) -> Vec<Wave> {
        (0..self.components)
            .map(|_| {
                let freq = rng.random_range(0.25..=self.max_cycles.max(0.25));
                let scale = self.amplitude / (1.0 + freq);
                Wave {
                    freq,
                    phase: rng.random_range(0.0..TAU),
                    amp: std::array::from_fn(|_| rng.random_range(-scale..=scale)),
                }
            })
            .collect()
    }

    /// A `frames × points` displacement grid with zero displacement at frame 0.
    pub fn trajectory(&self, frames: usize, points: usize, seed: u64) -> Result<TrajectoryGrid> {
        if frames == 0 || points == 0 {
            return Err(Error::InvalidArgument(
                "synthetic trajectories need frames and points".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let per_point: Vec<Vec<Wave>> = (0..points).map(|_| self.waves(&mut rng)).collect();
        let denom = (frames.max(2) - 1) as f64;
        TrajectoryGrid::from_fn(frames, points, |t, p| {
            let s = t as f64 / denom;
            let mut out = [0.0; 3];
            for w in &per_point[p] {
                let now = (TAU * w.freq * s + w.phase).sin();
                let start = w.phase.sin();
                for c in 0..3 {
                    out[c] += w.amp[c] * (now - start);
                }
            }
            out
        })
    }
}

/// A flat `nx × ny` vertex sheet in `[-0.9, 0.9]²` triangulated into `2(nx−1)(ny−1)` faces.
pub fn sheet(nx: usize, ny: usize) -> Result<ObjMesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!(
            "sheet needs at least 2×2 vertices, got {nx}×{ny}"
        )));
    }
    let coord = |i: usize, n: usize| -0.9 + 1.8 * i as f64 / (n - 1) as f64;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([coord(i, nx), coord(j, ny), 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let (b, c, d) = (a + 1, a + nx, a + nx + 1);
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    Ok(ObjMesh { vertices, faces })
}

/// A deforming sheet with roughly `vertices` vertices and band-limited motion.
pub fn mesh_sequence(frames: usize, vertices: usize, seed: u64, params: BandLimited) -> Result<MeshSequence> {
    let side = (vertices.max(4) as f64).sqrt().ceil() as usize;
    let ObjMesh { vertices: base, faces } = sheet(side, side)?;
    let deltas = params.trajectory(frames, base.len(), seed)?;
    MeshSequence::new(base, faces, deltas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_is_seeded_and_starts_at_rest() {
        let p = BandLimited::default();
        let a = p.trajectory(30, 5, 7).unwrap();
        assert_eq!(a, p.trajectory(30, 5, 7).unwrap());
        assert_ne!(a, p.trajectory(30, 5, 8).unwrap());
        assert!(a.frame(0).iter().all(|&v| v.abs() < 1e-15));
        assert!(a.max_abs() > 0.0);
    }

    #[test]
    fn sheet_counts() {
        let ObjMesh { vertices: v, faces: f } = sheet(3, 4).unwrap();
        assert_eq!(v.len(), 12);
        assert_eq!(f.len(), 12);
        assert!(sheet(1, 3).is_err());
    }
}
