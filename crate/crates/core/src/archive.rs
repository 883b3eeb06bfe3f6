//! Binary archives for grids, surfaces and embeddings.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes   "BSMA"
//! version      u32       1
//! header_len   u64       length of the JSON header in bytes
//! header       UTF-8 JSON metadata (kind, shape, dtype, …)
//! payload      row-major f32 values, product(shape) of them
//! ```
//!
//! Writes go to a temporary file in the target directory and are renamed into
//! place, so readers never observe a partial archive.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingStack, LevelSchedule};
use crate::error::{Error, Result};
use crate::grid::{ControlGrid, TrajectoryGrid};
use crate::sampling::SampledSurface;

pub const MAGIC: &[u8; 4] = b"BSMA";
pub const VERSION: u32 = 1;
const PREAMBLE: usize = 4 + 4 + 8;
/// Columns of a surface archive: point, normal, face, barycentric, corner vertices.
pub const SURFACE_COLUMNS: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveKind {
    Trajectory,
    Controls,
    Surface,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMetadata {
    pub kind: ArchiveKind,
    pub shape: Vec<usize>,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<[f64; 2]>,
    /// Triangle list for packed mesh sequences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<[usize; 3]>>,
    /// Effective run configuration of the producer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl ArchiveMetadata {
    pub fn new(kind: ArchiveKind, shape: Vec<usize>) -> Self {
        Self {
            kind,
            shape,
            dtype: "f32".into(),
            seed: None,
            schedule: None,
            reference_frames: None,
            mu: None,
            degree: None,
            source_frames: None,
            vertex_count: None,
            normalization: None,
            faces: None,
            config: None,
        }
    }

    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub metadata: ArchiveMetadata,
    pub payload: Vec<f32>,
}

fn to_f32(values: &[f64]) -> Vec<f32> {
    values.iter().map(|&v| v as f32).collect()
}

fn to_f64(values: &[f32]) -> Vec<f64> {
    values.iter().map(|&v| v as f64).collect()
}

impl Archive {
    pub fn new(metadata: ArchiveMetadata, payload: Vec<f32>) -> Result<Self> {
        if metadata.element_count() != payload.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} needs {} values, payload has {}",
                metadata.shape,
                metadata.element_count(),
                payload.len()
            )));
        }
        Ok(Self { metadata, payload })
    }

    pub fn kind(&self) -> ArchiveKind {
        self.metadata.kind
    }

    fn expect_kind(&self, kind: ArchiveKind, dims: usize) -> Result<()> {
        if self.metadata.kind != kind || self.metadata.shape.len() != dims {
            return Err(Error::ShapeMismatch(format!(
                "expected a {kind:?} archive with {dims} dimensions, found {:?} with shape {:?}",
                self.metadata.kind, self.metadata.shape
            )));
        }
        Ok(())
    }

    pub fn from_trajectory(traj: &TrajectoryGrid) -> Self {
        let meta = ArchiveMetadata::new(ArchiveKind::Trajectory, vec![traj.frames(), traj.points(), 3]);
        Self {
            metadata: meta,
            payload: to_f32(traj.as_slice()),
        }
    }

    pub fn to_trajectory(&self) -> Result<TrajectoryGrid> {
        self.expect_kind(ArchiveKind::Trajectory, 3)?;
        let s = &self.metadata.shape;
        TrajectoryGrid::new(s[0], s[1], to_f64(&self.payload))
    }

    pub fn from_controls(controls: &ControlGrid) -> Self {
        let mut meta = ArchiveMetadata::new(ArchiveKind::Controls, vec![controls.controls(), controls.points(), 3]);
        meta.degree = Some(controls.degree());
        meta.source_frames = controls.source_frames();
        Self {
            metadata: meta,
            payload: to_f32(controls.as_slice()),
        }
    }

    pub fn to_controls(&self) -> Result<ControlGrid> {
        self.expect_kind(ArchiveKind::Controls, 3)?;
        let s = &self.metadata.shape;
        let degree = self.metadata.degree.unwrap_or(crate::spline::DEFAULT_DEGREE);
        Ok(
            ControlGrid::new(s[0], s[1], degree, to_f64(&self.payload))?
                .with_source_frames(self.metadata.source_frames),
        )
    }

    pub fn from_surface(surface: &SampledSurface) -> Self {
        let mut payload = Vec::with_capacity(surface.len() * SURFACE_COLUMNS);
        for i in 0..surface.len() {
            payload.extend(surface.points[i].iter().map(|&v| v as f32));
            payload.extend(surface.normals[i].iter().map(|&v| v as f32));
            payload.push(surface.faces[i] as f32);
            payload.extend(surface.barycentric[i].iter().map(|&v| v as f32));
            payload.extend(surface.corners[i].iter().map(|&v| v as f32));
        }
        let mut meta = ArchiveMetadata::new(ArchiveKind::Surface, vec![surface.len(), SURFACE_COLUMNS]);
        meta.seed = Some(surface.seed);
        meta.vertex_count = Some(surface.vertex_count);
        Self {
            metadata: meta,
            payload,
        }
    }

    pub fn to_surface(&self) -> Result<SampledSurface> {
        self.expect_kind(ArchiveKind::Surface, 2)?;
        if self.metadata.shape[1] != SURFACE_COLUMNS {
            return Err(Error::ShapeMismatch(format!(
                "surface archives have {SURFACE_COLUMNS} columns, found {}",
                self.metadata.shape[1]
            )));
        }
        let rows = self.payload.chunks_exact(SURFACE_COLUMNS);
        let v3 = |r: &[f32], o: usize| [r[o] as f64, r[o + 1] as f64, r[o + 2] as f64];
        let mut s = SampledSurface {
            points: Vec::new(),
            normals: Vec::new(),
            faces: Vec::new(),
            barycentric: Vec::new(),
            corners: Vec::new(),
            vertex_count: self.metadata.vertex_count.unwrap_or(0),
            seed: self.metadata.seed.unwrap_or(0),
        };
        for r in rows {
            s.points.push(v3(r, 0));
            s.normals.push(v3(r, 3));
            s.faces.push(r[6] as usize);
            s.barycentric.push(v3(r, 7));
            s.corners.push([r[10] as usize, r[11] as usize, r[12] as usize]);
        }
        Ok(s)
    }

    pub fn from_embedding(stack: &EmbeddingStack, mu: f64) -> Self {
        let schedule = stack.schedule();
        let mut meta = ArchiveMetadata::new(ArchiveKind::Embedding, vec![schedule.total_rows(), stack.points(), 3]);
        meta.schedule = Some(schedule.counts().to_vec());
        meta.reference_frames = Some(schedule.reference_frames());
        meta.degree = Some(schedule.degree());
        meta.mu = Some(mu);
        Self {
            metadata: meta,
            payload: to_f32(stack.as_slice()),
        }
    }

    pub fn to_embedding(&self) -> Result<EmbeddingStack> {
        self.expect_kind(ArchiveKind::Embedding, 3)?;
        let counts = self
            .metadata
            .schedule
            .clone()
            .ok_or_else(|| Error::ShapeMismatch("embedding archive without a schedule".into()))?;
        let degree = self.metadata.degree.unwrap_or(crate::spline::DEFAULT_DEGREE);
        let schedule = LevelSchedule::new(
            counts,
            self.metadata
                .reference_frames
                .unwrap_or(crate::embedding::DEFAULT_REFERENCE_FRAMES),
            degree,
        )?;
        EmbeddingStack::from_flat(schedule, self.metadata.shape[1], degree, to_f64(&self.payload))
    }
}

/// Serializes an archive into its on-disk byte layout.
pub fn encode(archive: &Archive) -> Result<Vec<u8>> {
    if let Some(i) = archive.payload.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if archive.metadata.element_count() != archive.payload.len() {
        return Err(Error::ShapeMismatch(format!(
            "shape {:?} does not match {} payload values",
            archive.metadata.shape,
            archive.payload.len()
        )));
    }
    let header = serde_json::to_vec(&archive.metadata)?;
    let mut bytes = Vec::with_capacity(PREAMBLE + header.len() + archive.payload.len() * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header);
    for v in &archive.payload {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok(bytes)
}

/// Parses archive bytes; `strict` additionally rejects non-finite payload values.
pub fn decode(bytes: &[u8], path: &Path, strict: bool) -> Result<Archive> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::archive(path, "bad magic (not a BSMA archive)"));
    }
    if bytes.len() < PREAMBLE {
        return Err(Error::archive(
            path,
            format!(
                "truncated preamble: expected at least {PREAMBLE} bytes, found {}",
                bytes.len()
            ),
        ));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::archive(
            path,
            format!("unsupported archive version {version} (this build reads version {VERSION})"),
        ));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let header_end = (PREAMBLE as u64)
        .checked_add(header_len)
        .filter(|&end| end <= bytes.len() as u64)
        .ok_or_else(|| {
            Error::archive(
                path,
                format!(
                    "truncated header: expected {} bytes, found {}",
                    PREAMBLE as u64 + header_len,
                    bytes.len()
                ),
            )
        })? as usize;
    let metadata: ArchiveMetadata = serde_json::from_slice(&bytes[PREAMBLE..header_end])
        .map_err(|e| Error::archive(path, format!("invalid header: {e}")))?;
    if metadata.dtype != "f32" {
        return Err(Error::archive(path, format!("unsupported dtype {}", metadata.dtype)));
    }
    let expected = metadata
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(header_end))
        .ok_or_else(|| Error::archive(path, format!("shape {:?} overflows", metadata.shape)))?;
    if expected != bytes.len() {
        return Err(Error::archive(
            path,
            format!(
                "payload size mismatch for shape {:?}: expected {expected} bytes, found {}",
                metadata.shape,
                bytes.len()
            ),
        ));
    }
    let payload: Vec<f32> = bytes[header_end..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    if strict {
        if let Some(i) = payload.iter().position(|v| !v.is_finite()) {
            return Err(Error::archive(path, format!("non-finite payload value at index {i}")));
        }
    }
    Ok(Archive { metadata, payload })
}

/// Atomically writes an archive to `path`.
pub fn write_archive(path: impl AsRef<Path>, archive: &Archive) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(archive)?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::archive(path, "archive path has no file name"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<Archive> {
    read_archive_with(path, false)
}

pub fn read_archive_with(path: impl AsRef<Path>, strict: bool) -> Result<Archive> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path, strict)
}
