//! Dataset manifests and mesh-sequence loading (OBJ frames or packed archives).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::archive::{read_archive_with, write_archive, Archive, ArchiveKind, ArchiveMetadata};
use crate::error::{Error, Result};
use crate::grid::TrajectoryGrid;
use crate::sampling::MeshSequence;

pub const DEFAULT_NORMALIZATION: [f64; 2] = [-0.9, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    #[default]
    Obj,
    Packed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub frames: usize,
    pub vertices: usize,
    /// One OBJ per frame, or a single packed archive.
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub format: MeshFormat,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default = "default_box")]
    pub normalization: [f64; 2],
    /// Directory that relative entry paths resolve against (not serialized).
    #[serde(skip)]
    pub root: PathBuf,
}

fn default_box() -> [f64; 2] {
    DEFAULT_NORMALIZATION
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self {
            entries,
            normalization: DEFAULT_NORMALIZATION,
            root: PathBuf::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Self =
            serde_json::from_str(&text).map_err(|e| Error::Mesh(format!("manifest {}: {e}", path.display())))?;
        manifest.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let [lo, hi] = manifest.normalization;
        if !(lo < hi) {
            return Err(Error::Mesh(format!("normalization box [{lo}, {hi}] is empty")));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Loads one entry, normalized into the manifest's box when `normalize` is set.
    pub fn load_entry(&self, entry: &ManifestEntry, normalize: bool) -> Result<MeshSequence> {
        let paths: Vec<PathBuf> = entry.paths.iter().map(|p| self.resolve(p)).collect();
        let mut mesh = match entry.format {
            MeshFormat::Obj => load_obj_sequence(&paths)?,
            MeshFormat::Packed => {
                let [path] = paths.as_slice() else {
                    return Err(Error::Mesh(format!(
                        "{}: packed entries take exactly one path, found {}",
                        entry.id,
                        paths.len()
                    )));
                };
                read_packed(path)?
            }
        };
        if entry.frames != 0 && mesh.frames() != entry.frames {
            return Err(Error::Mesh(format!(
                "{}: manifest lists {} frames, data has {}",
                entry.id,
                entry.frames,
                mesh.frames()
            )));
        }
        if entry.vertices != 0 && mesh.base_vertices.len() != entry.vertices {
            return Err(Error::Mesh(format!(
                "{}: manifest lists {} vertices, data has {}",
                entry.id,
                entry.vertices,
                mesh.base_vertices.len()
            )));
        }
        if normalize {
            normalize_into_box(&mut mesh, self.normalization)?;
        }
        Ok(mesh)
    }
}

/// A triangle mesh read from a single OBJ file.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

/// Parses `v` and `f` records; polygons are fan-triangulated, other records ignored.
pub fn parse_obj(text: &str) -> std::result::Result<ObjMesh, String> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut v = [0.0; 3];
                for slot in &mut v {
                    let tok = parts
                        .next()
                        .ok_or_else(|| format!("line {}: short vertex", lineno + 1))?;
                    *slot = tok.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1))?;
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(format!("line {}: non-finite vertex", lineno + 1));
                }
                vertices.push(v);
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in parts {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|e| format!("line {}: {e}", lineno + 1))?;
                    let resolved = match i {
                        0 => return Err(format!("line {}: zero face index", lineno + 1)),
                        i if i > 0 => i as usize - 1,
                        i => {
                            let back = i.unsigned_abs() as usize;
                            vertices
                                .len()
                                .checked_sub(back)
                                .ok_or_else(|| format!("line {}: face index {i} out of range", lineno + 1))?
                        }
                    };
                    idx.push(resolved);
                }
                if idx.len() < 3 {
                    return Err(format!("line {}: face with fewer than three vertices", lineno + 1));
                }
                for j in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[j], idx[j + 1]]);
                }
            }
            _ => {}
        }
    }
    if let Some(f) = faces.iter().find(|f| f.iter().any(|&v| v >= vertices.len())) {
        return Err(format!("face {f:?} references a vertex beyond {}", vertices.len()));
    }
    Ok(ObjMesh { vertices, faces })
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<ObjMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|m| Error::Mesh(format!("{}: {m}", path.display())))
}

pub fn write_obj(path: impl AsRef<Path>, vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> Result<()> {
    use std::fmt::Write as _;
    let path = path.as_ref();
    let mut out = String::new();
    for v in vertices {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Builds a sequence from absolute per-frame positions.
pub fn sequence_from_frames(frames: &[Vec<[f64; 3]>], faces: Vec<[usize; 3]>) -> Result<MeshSequence> {
    let Some(first) = frames.first() else {
        return Err(Error::Mesh("sequence has no frames".into()));
    };
    let n = first.len();
    for (t, f) in frames.iter().enumerate() {
        if f.len() != n {
            return Err(Error::Mesh(format!(
                "frame {t} has {} vertices, frame 0 has {n}",
                f.len()
            )));
        }
    }
    let deltas = TrajectoryGrid::from_fn(frames.len(), n, |t, i| {
        let (a, b) = (frames[t][i], first[i]);
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    })?;
    MeshSequence::new(first.clone(), faces, deltas)
}

pub fn load_obj_sequence(paths: &[PathBuf]) -> Result<MeshSequence> {
    if paths.is_empty() {
        return Err(Error::Mesh("sequence has no frames".into()));
    }
    let mut positions = Vec::with_capacity(paths.len());
    let mut faces: Option<Vec<[usize; 3]>> = None;
    for (t, p) in paths.iter().enumerate() {
        let mesh = read_obj(p)?;
        match &faces {
            None => faces = Some(mesh.faces),
            Some(f0) if *f0 != mesh.faces => {
                return Err(Error::Mesh(format!(
                    "{}: connectivity of frame {t} differs from frame 0",
                    p.display()
                )))
            }
            Some(_) => {}
        }
        positions.push(mesh.vertices);
    }
    sequence_from_frames(&positions, faces.unwrap_or_default())
}

/// Writes a sequence as a packed archive of absolute positions with faces in the header.
pub fn write_packed(path: impl AsRef<Path>, mesh: &MeshSequence) -> Result<()> {
    let (t, n) = (mesh.frames(), mesh.base_vertices.len());
    let mut payload = Vec::with_capacity(t * n * 3);
    for f in 0..t {
        payload.extend(mesh.positions(f).iter().flatten().map(|&v| v as f32));
    }
    let mut meta = ArchiveMetadata::new(ArchiveKind::Trajectory, vec![t, n, 3]);
    meta.faces = Some(mesh.faces.clone());
    write_archive(path, &Archive::new(meta, payload)?)
}

pub fn read_packed(path: impl AsRef<Path>) -> Result<MeshSequence> {
    let path = path.as_ref();
    let archive = read_archive_with(path, true)?;
    let absolute = archive.to_trajectory()?;
    let faces = archive.metadata.faces.clone().unwrap_or_default();
    let frames: Vec<Vec<[f64; 3]>> = (0..absolute.frames())
        .map(|t| (0..absolute.points()).map(|i| absolute.get(t, i)).collect())
        .collect();
    sequence_from_frames(&frames, faces)
}

/// Uniformly rescales the sequence so the first frame's bounding box is centered
/// in `[lo, hi]^3` and its longest side spans the box. Displacements scale along.
pub fn normalize_into_box(mesh: &mut MeshSequence, [lo, hi]: [f64; 2]) -> Result<()> {
    if mesh.base_vertices.is_empty() {
        return Ok(());
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for v in &mesh.base_vertices {
        for i in 0..3 {
            min[i] = min[i].min(v[i]);
            max[i] = max[i].max(v[i]);
        }
    }
    let extent = (0..3).map(|i| max[i] - min[i]).fold(0.0, f64::max);
    let scale = if extent > 0.0 { (hi - lo) / extent } else { 1.0 };
    let target = 0.5 * (lo + hi);
    for v in &mut mesh.base_vertices {
        for i in 0..3 {
            let c = 0.5 * (min[i] + max[i]);
            v[i] = target + (v[i] - c) * scale;
        }
    }
    let scaled: Vec<f64> = mesh.deltas.as_slice().iter().map(|d| d * scale).collect();
    mesh.deltas = TrajectoryGrid::new(mesh.deltas.frames(), mesh.deltas.points(), scaled)?;
    Ok(())
}
