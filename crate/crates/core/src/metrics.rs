//! Reconstruction-quality metrics and the linear-interpolation baseline.
//!
//! Averages use an incremental mean in a fixed order, so averaging identical
//! values returns that value exactly and results never depend on scheduling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ControlGrid, TrajectoryGrid};
use crate::solver::reproject;

pub const DEFAULT_DELTA: f64 = 1e-3;
pub const DEFAULT_LAMBDA_CORR: f64 = 0.3;
pub const DEFAULT_LAMBDA_RIGID: f64 = 0.1;
pub const DEFAULT_KNN: usize = 8;
pub const DEFAULT_BASELINE_SAMPLES: usize = 16;

/// How `r_t(i, j)` is measured for the rigidity metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RigidityMode {
    /// `‖(v_i + Δ_i(t)) − (v_j + Δ_j(t))‖`, the deformed edge length.
    #[default]
    DeformedLength,
    /// `‖Δ_i(t) − Δ_j(t)‖`, ignoring the rest shape.
    DisplacementDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Charbonnier stabilizer `δ`.
    pub delta: f64,
    /// Weight of the correspondence term.
    pub lambda1: f64,
    /// Weight of the rigidity term.
    pub lambda2: f64,
    pub knn_k: usize,
    pub rigidity: RigidityMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            lambda1: DEFAULT_LAMBDA_CORR,
            lambda2: DEFAULT_LAMBDA_RIGID,
            knn_k: DEFAULT_KNN,
            rigidity: RigidityMode::DeformedLength,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) {
            return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fixed-order incremental mean.
#[derive(Debug, Default, Clone, Copy)]
pub struct RunningMean {
    count: usize,
    mean: f64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl FromIterator<f64> for RunningMean {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = RunningMean::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} values", a.len(), b.len())));
    }
    Ok(())
}

/// `sqrt(‖pred − target‖²_F + δ²)` for one instance.
pub fn charbonnier(pred: &[f64], target: &[f64], delta: f64) -> Result<f64> {
    same_len(pred, target)?;
    let sq: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq + delta * delta).sqrt())
}

/// Charbonnier averaged over a batch of instances.
pub fn charbonnier_mean<'a>(pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>, delta: f64) -> Result<f64> {
    let mut mean = RunningMean::default();
    for (p, t) in pairs {
        mean.push(charbonnier(p, t, delta)?);
    }
    Ok(mean.mean())
}

fn check_traj_pair(pred: &TrajectoryGrid, gt: &TrajectoryGrid) -> Result<()> {
    if pred.frames() != gt.frames() || pred.points() != gt.points() {
        return Err(Error::ShapeMismatch(format!(
            "trajectories {}x{} and {}x{}",
            pred.frames(),
            pred.points(),
            gt.frames(),
            gt.points()
        )));
    }
    Ok(())
}

/// Charbonnier per point trajectory, averaged over points.
pub fn trajectory_charbonnier(pred: &TrajectoryGrid, gt: &TrajectoryGrid, delta: f64) -> Result<f64> {
    check_traj_pair(pred, gt)?;
    let per_point = (0..gt.points()).map(|p| {
        let mut sq = 0.0;
        for t in 0..gt.frames() {
            let (a, b) = (pred.get(t, p), gt.get(t, p));
            for c in 0..3 {
                sq += (a[c] - b[c]) * (a[c] - b[c]);
            }
        }
        (sq + delta * delta).sqrt()
    });
    Ok(per_point.collect::<RunningMean>().mean())
}

/// Charbonnier between the reprojection of `pred_controls` at the ground
/// truth's frame count and the ground truth.
pub fn correspondence_loss(pred_controls: &ControlGrid, gt: &TrajectoryGrid, config: &MetricConfig) -> Result<f64> {
    if pred_controls.points() != gt.points() {
        return Err(Error::ShapeMismatch(format!(
            "controls for {} points, trajectory for {}",
            pred_controls.points(),
            gt.points()
        )));
    }
    let pred = reproject(pred_controls, gt.frames())?;
    trajectory_charbonnier(&pred, gt, config.delta)
}

/// Charbonnier of frame-to-frame changes in neighbour distances.
///
/// `neighbors` is row-major `n × K` as produced by [`crate::spatial::knn`].
pub fn rigidity_loss(
    pred: &TrajectoryGrid,
    base_points: &[[f64; 3]],
    neighbors: &[usize],
    config: &MetricConfig,
) -> Result<f64> {
    let n = pred.points();
    if pred.frames() < 2 {
        return Err(Error::InvalidArgument("rigidity needs at least two frames".into()));
    }
    if base_points.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} base points for {n} trajectories",
            base_points.len()
        )));
    }
    if neighbors.is_empty() || neighbors.len() % n != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} neighbour indices for {n} points",
            neighbors.len()
        )));
    }
    if let Some(&bad) = neighbors.iter().find(|&&j| j >= n) {
        return Err(Error::InvalidArgument(format!(
            "neighbour index {bad} out of range {n}"
        )));
    }
    let k = neighbors.len() / n;
    let delta2 = config.delta * config.delta;
    let distance = |t: usize, i: usize, j: usize| -> f64 {
        let (di, dj) = (pred.get(t, i), pred.get(t, j));
        let mut s = 0.0;
        for c in 0..3 {
            let e = match config.rigidity {
                RigidityMode::DeformedLength => (base_points[i][c] + di[c]) - (base_points[j][c] + dj[c]),
                RigidityMode::DisplacementDifference => di[c] - dj[c],
            };
            s += e * e;
        }
        s.sqrt()
    };
    let mut mean = RunningMean::default();
    let mut previous: Vec<f64> = (0..n * k).map(|e| distance(0, e / k, neighbors[e])).collect();
    let mut current = vec![0.0; n * k];
    for t in 1..pred.frames() {
        for (e, r) in current.iter_mut().enumerate() {
            *r = distance(t, e / k, neighbors[e]);
        }
        for (r, r_prev) in current.iter().zip(&previous) {
            let d = r - r_prev;
            mean.push((d * d + delta2).sqrt());
        }
        std::mem::swap(&mut previous, &mut current);
    }
    Ok(mean.mean())
}

/// `fit + λ₁·corr + λ₂·rigid`.
pub fn total_weighted_loss(fit: f64, corr: f64, rigid: f64, config: &MetricConfig) -> f64 {
    fit + config.lambda1 * corr + config.lambda2 * rigid
}

/// Mean absolute error: per point over frames and coordinates, then over points.
pub fn mean_l1_error(pred: &TrajectoryGrid, gt: &TrajectoryGrid) -> Result<f64> {
    check_traj_pair(pred, gt)?;
    let per_point = (0..gt.points()).map(|p| {
        (0..gt.frames())
            .map(|t| {
                let (a, b) = (pred.get(t, p), gt.get(t, p));
                (0..3).map(|c| (a[c] - b[c]).abs()).collect::<RunningMean>().mean()
            })
            .collect::<RunningMean>()
            .mean()
    });
    Ok(per_point.collect::<RunningMean>().mean())
}

/// Per-instance mean of [`mean_l1_error`] across a batch.
pub fn mean_l1_error_batch<'a>(
    pairs: impl IntoIterator<Item = (&'a TrajectoryGrid, &'a TrajectoryGrid)>,
) -> Result<f64> {
    let mut mean = RunningMean::default();
    for (p, g) in pairs {
        mean.push(mean_l1_error(p, g)?);
    }
    Ok(mean.mean())
}

/// Frame indices kept by the baseline: `round(i (T−1) / (s−1))`, deduplicated.
pub fn baseline_indices(frames: usize, samples: usize) -> Vec<usize> {
    let mut kept: Vec<usize> = (0..samples)
        .map(|i| ((i * (frames - 1)) as f64 / (samples - 1) as f64).round() as usize)
        .collect();
    kept.dedup();
    kept
}

/// Keeps `samples` evenly spaced frames and linearly interpolates the rest.
pub fn linear_baseline(traj: &TrajectoryGrid, samples: usize) -> Result<TrajectoryGrid> {
    let frames = traj.frames();
    if frames < 2 {
        return Err(Error::InvalidArgument(
            "linear baseline needs at least two frames".into(),
        ));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "linear baseline needs at least two samples".into(),
        ));
    }
    let kept = baseline_indices(frames, samples);
    let width = traj.width();
    let mut data = Vec::with_capacity(frames * width);
    let mut seg = 0;
    for t in 0..frames {
        while seg + 2 < kept.len() && kept[seg + 1] <= t {
            seg += 1;
        }
        let (a, b) = (kept[seg], kept[seg + 1]);
        let w = (t - a) as f64 / (b - a) as f64;
        let (fa, fb) = (traj.frame(a), traj.frame(b));
        if w == 0.0 {
            data.extend_from_slice(fa);
        } else if w == 1.0 {
            data.extend_from_slice(fb);
        } else {
            data.extend(fa.iter().zip(fb).map(|(x, y)| (1.0 - w) * x + w * y));
        }
    }
    TrajectoryGrid::new(frames, traj.points(), data)
}

/// One line of a metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub id: String,
    pub frames: usize,
    pub k: usize,
    pub method: String,
    pub mean_l1: f64,
    pub rigidity: f64,
    pub corr: f64,
    pub wall_time_ms: f64,
}
