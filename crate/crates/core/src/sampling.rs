//! Area-weighted surface sampling and barycentric attribute transfer.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ControlGrid, TrajectoryGrid};

pub const DEFAULT_SAMPLE_COUNT: usize = 20_000;
pub const DEFAULT_SHARD_SIZE: usize = 20_000;

type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn normalize(a: Vec3) -> Option<Vec3> {
    let n = norm(a);
    (n > 1e-300 && n.is_finite()).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

/// A triangle mesh whose vertices move over time with fixed connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSequence {
    pub base_vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Displacements from `base_vertices`; frame 0 is all zeros.
    pub deltas: TrajectoryGrid,
    pub vertex_normals: Option<Vec<Vec3>>,
}

impl MeshSequence {
    pub fn new(base_vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, deltas: TrajectoryGrid) -> Result<Self> {
        if deltas.points() != base_vertices.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} vertices with displacements for {} points",
                base_vertices.len(),
                deltas.points()
            )));
        }
        if let Some(face) = faces.iter().find(|f| f.iter().any(|&v| v >= base_vertices.len())) {
            return Err(Error::Mesh(format!(
                "face {face:?} references a vertex beyond {}",
                base_vertices.len()
            )));
        }
        Ok(Self {
            base_vertices,
            faces,
            deltas,
            vertex_normals: None,
        })
    }

    /// A single-frame mesh.
    pub fn static_mesh(base_vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let deltas = TrajectoryGrid::zeros(1, base_vertices.len().max(1));
        Self::new(base_vertices, faces, deltas)
    }

    pub fn with_vertex_normals(mut self, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != self.base_vertices.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.base_vertices.len()
            )));
        }
        self.vertex_normals = Some(normals);
        Ok(self)
    }

    pub fn frames(&self) -> usize {
        self.deltas.frames()
    }

    /// Twice-area-weighted face normal (unnormalized cross product).
    pub fn face_cross(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.faces[face];
        let (va, vb, vc) = (self.base_vertices[a], self.base_vertices[b], self.base_vertices[c]);
        cross(sub(vb, va), sub(vc, va))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * norm(self.face_cross(face))
    }

    /// Provided vertex normals, else area-weighted averages of adjacent face normals.
    pub fn resolved_vertex_normals(&self) -> Vec<Option<Vec3>> {
        if let Some(normals) = &self.vertex_normals {
            return normals.iter().map(|&n| normalize(n)).collect();
        }
        let mut acc = vec![[0.0; 3]; self.base_vertices.len()];
        for (f, face) in self.faces.iter().enumerate() {
            let c = self.face_cross(f);
            for &v in face {
                for i in 0..3 {
                    acc[v][i] += c[i];
                }
            }
        }
        acc.into_iter().map(normalize).collect()
    }

    /// Vertex positions at frame `t`.
    pub fn positions(&self, t: usize) -> Vec<Vec3> {
        self.base_vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = self.deltas.get(t, i);
                [v[0] + d[0], v[1] + d[1], v[2] + d[2]]
            })
            .collect()
    }
}

/// Dense surface samples with normals and their barycentric provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSurface {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub faces: Vec<usize>,
    pub barycentric: Vec<Vec3>,
    /// Vertex indices of each sample's face.
    pub corners: Vec<[usize; 3]>,
    pub vertex_count: usize,
    pub seed: u64,
}

impl SampledSurface {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset of samples, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            faces: indices.iter().map(|&i| self.faces[i]).collect(),
            barycentric: indices.iter().map(|&i| self.barycentric[i]).collect(),
            corners: indices.iter().map(|&i| self.corners[i]).collect(),
            vertex_count: self.vertex_count,
            seed: self.seed,
        }
    }

    /// Randomly partitions the samples into shards of at most `shard_size`.
    pub fn shards(&self, shard_size: usize, seed: u64) -> Result<Vec<SampledSurface>> {
        if shard_size == 0 {
            return Err(Error::InvalidArgument("shard size must be positive".into()));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(order.chunks(shard_size).map(|chunk| self.select(chunk)).collect())
    }

    /// Barycentric transfer of a row-major `n_v × dim` per-vertex field.
    pub fn interpolate(&self, field: &[f64], dim: usize) -> Result<Vec<f64>> {
        if dim == 0 || field.len() != self.vertex_count * dim {
            return Err(Error::ShapeMismatch(format!(
                "field of {} values is not {} vertices x {dim}",
                field.len(),
                self.vertex_count
            )));
        }
        let mut out = vec![0.0; self.len() * dim];
        out.par_chunks_mut(dim).enumerate().for_each(|(s, row)| {
            let [a, b, c] = self.corners[s];
            let w = self.barycentric[s];
            for (d, v) in row.iter_mut().enumerate() {
                *v = w[0] * field[a * dim + d] + w[1] * field[b * dim + d] + w[2] * field[c * dim + d];
            }
        });
        Ok(out)
    }

    fn interpolate_rows(&self, rows: usize, data: &[f64]) -> Result<Vec<f64>> {
        let width = self.vertex_count * 3;
        let mut out = Vec::with_capacity(rows * self.len() * 3);
        for r in 0..rows {
            out.extend(self.interpolate(&data[r * width..(r + 1) * width], 3)?);
        }
        Ok(out)
    }

    /// `P_k → P_{N,k}`, one control slice at a time.
    pub fn interpolate_controls(&self, controls: &ControlGrid) -> Result<ControlGrid> {
        self.check_points(controls.points())?;
        let data = self.interpolate_rows(controls.controls(), controls.as_slice())?;
        Ok(
            ControlGrid::new(controls.controls(), self.len(), controls.degree(), data)?
                .with_source_frames(controls.source_frames()),
        )
    }

    /// `V_T → V_{N,T}`, one frame at a time.
    pub fn interpolate_trajectory(&self, traj: &TrajectoryGrid) -> Result<TrajectoryGrid> {
        self.check_points(traj.points())?;
        let data = self.interpolate_rows(traj.frames(), traj.as_slice())?;
        TrajectoryGrid::new(traj.frames(), self.len(), data)
    }

    fn check_points(&self, points: usize) -> Result<()> {
        if points != self.vertex_count {
            return Err(Error::ShapeMismatch(format!(
                "grid over {points} points, mesh has {} vertices",
                self.vertex_count
            )));
        }
        Ok(())
    }
}

/// Draws `count` area-uniform samples from the base mesh.
///
/// Faces are chosen with probability proportional to area and points
/// uniformly inside them; normals interpolate vertex normals and fall back to
/// the flat face normal. Output depends only on the mesh and `seed`.
pub fn sample_surface(mesh: &MeshSequence, count: usize, seed: u64) -> Result<SampledSurface> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        let area = mesh.face_area(f);
        if area.is_finite() && area > 0.0 {
            total += area;
        }
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateMesh(format!(
            "none of {} faces has positive area",
            mesh.faces.len()
        )));
    }
    let vertex_normals = mesh.resolved_vertex_normals();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut surface = SampledSurface {
        points: Vec::with_capacity(count),
        normals: Vec::with_capacity(count),
        faces: Vec::with_capacity(count),
        barycentric: Vec::with_capacity(count),
        corners: Vec::with_capacity(count),
        vertex_count: mesh.base_vertices.len(),
        seed,
    };
    for _ in 0..count {
        let u = rng.random::<f64>() * total;
        let face = cumulative.partition_point(|&c| c <= u).min(mesh.faces.len() - 1);
        let (mut r1, mut r2) = (rng.random::<f64>(), rng.random::<f64>());
        if r1 + r2 > 1.0 {
            r1 = 1.0 - r1;
            r2 = 1.0 - r2;
        }
        let w = [1.0 - r1 - r2, r1, r2];
        let corners = mesh.faces[face];
        let v = corners.map(|i| mesh.base_vertices[i]);
        let point: Vec3 = std::array::from_fn(|d| w[0] * v[0][d] + w[1] * v[1][d] + w[2] * v[2][d]);

        let flat = normalize(mesh.face_cross(face)).expect("sampled faces have positive area");
        let smooth = match corners.map(|i| vertex_normals[i]) {
            [Some(a), Some(b), Some(c)] => normalize(std::array::from_fn(|d| w[0] * a[d] + w[1] * b[d] + w[2] * c[d])),
            _ => None,
        };
        surface.points.push(point);
        surface.normals.push(smooth.unwrap_or(flat));
        surface.faces.push(face);
        surface.barycentric.push(w);
        surface.corners.push(corners);
    }
    Ok(surface)
}

/// Barycentric transfer of a per-vertex field with `dim` columns.
pub fn interpolate_attributes(surface: &SampledSurface, field: &[f64], dim: usize) -> Result<Vec<f64>> {
    surface.interpolate(field, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> MeshSequence {
        MeshSequence::static_mesh(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn two_triangle_square_split_is_even() {
        // Binomial(10000, 1/2): sd = 50, so 5% = 250 is five sigma.
        let s = sample_surface(&unit_square(), 10_000, 7).unwrap();
        let first = s.faces.iter().filter(|&&f| f == 0).count();
        assert!((first as f64 - 5000.0).abs() <= 250.0, "{first}");
    }

    #[test]
    fn flat_plane_normals_follow_winding() {
        let s = sample_surface(&unit_square(), 500, 1).unwrap();
        for n in &s.normals {
            assert!((n[2] - 1.0).abs() < 1e-12 && n[0].abs() < 1e-12 && n[1].abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = sample_surface(&unit_square(), 300, 42).unwrap();
        let b = sample_surface(&unit_square(), 300, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_surface(&unit_square(), 300, 43).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn provenance_reconstructs_points() {
        let mesh = unit_square();
        let s = sample_surface(&mesh, 1000, 3).unwrap();
        for i in 0..s.len() {
            let w = s.barycentric[i];
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let v = s.corners[i].map(|c| mesh.base_vertices[c]);
            for d in 0..3 {
                let p = w[0] * v[0][d] + w[1] * v[1][d] + w[2] * v[2][d];
                assert!((p - s.points[i][d]).abs() < 1e-9);
            }
            assert!((norm(s.normals[i]) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_meshes_are_rejected() {
        let mesh =
            MeshSequence::static_mesh(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        assert!(matches!(sample_surface(&mesh, 10, 0), Err(Error::DegenerateMesh(_))));
        assert!(MeshSequence::static_mesh(vec![[0.0; 3]], vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn interpolation_reproduces_linear_fields() {
        let mesh = unit_square();
        let s = sample_surface(&mesh, 200, 9).unwrap();
        let xs: Vec<f64> = mesh.base_vertices.iter().map(|v| v[0]).collect();
        let got = interpolate_attributes(&s, &xs, 1).unwrap();
        for (g, p) in got.iter().zip(&s.points) {
            assert!((g - p[0]).abs() < 1e-9);
        }
        let constant = interpolate_attributes(&s, &[2.5; 8], 2).unwrap();
        assert!(constant.iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(interpolate_attributes(&s, &[1.0; 5], 1).is_err());
    }

    #[test]
    fn shards_partition_samples() {
        let s = sample_surface(&unit_square(), 1000, 5).unwrap();
        let shards = s.shards(300, 11).unwrap();
        assert_eq!(
            shards.iter().map(|x| x.len()).collect::<Vec<_>>(),
            vec![300, 300, 300, 100]
        );
        let mut all: Vec<(u64, u64)> = shards
            .iter()
            .flat_map(|sh| sh.points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())))
            .collect();
        let mut orig: Vec<(u64, u64)> = s.points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);
    }
}
