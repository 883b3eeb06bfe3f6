//! Per-point time series stored as dense row-major `rows × points × 3` arrays.

use crate::error::{Error, Result};

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Displacements `ΔV_t = V_t − V_0` for `n` points over `T` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGrid {
    frames: usize,
    points: usize,
    data: Vec<f64>,
}

impl TrajectoryGrid {
    pub fn new(frames: usize, points: usize, data: Vec<f64>) -> Result<Self> {
        if frames == 0 || points == 0 {
            return Err(Error::InvalidArgument(format!(
                "trajectory grid needs at least one frame and one point (got {frames}x{points})"
            )));
        }
        if data.len() != frames * points * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {frames}x{points}x3 trajectory grid",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { frames, points, data })
    }

    pub fn zeros(frames: usize, points: usize) -> Self {
        Self {
            frames,
            points,
            data: vec![0.0; frames * points * 3],
        }
    }

    /// Builds a grid from a closure `f(frame, point) -> [x, y, z]`.
    pub fn from_fn(frames: usize, points: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(frames * points * 3);
        for t in 0..frames {
            for p in 0..points {
                data.extend_from_slice(&f(t, p));
            }
        }
        Self::new(frames, points, data)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Number of scalar columns (`3n`).
    pub fn width(&self) -> usize {
        self.points * 3
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.width();
        &self.data[t * w..(t + 1) * w]
    }

    pub fn get(&self, t: usize, point: usize) -> [f64; 3] {
        let i = (t * self.points + point) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Series of one point as `T × 3` row-major values.
    pub fn point_series(&self, point: usize) -> Vec<f64> {
        (0..self.frames).flat_map(|t| self.get(t, point)).collect()
    }

    /// Keeps the listed points, in order.
    pub fn select_points(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.points) {
            return Err(Error::InvalidArgument(format!(
                "point index {bad} out of range {}",
                self.points
            )));
        }
        Self::from_fn(self.frames, indices.len(), |t, p| self.get(t, indices[p]))
    }

    /// Largest absolute coordinate, used for the soft range warning.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// B-spline control points `P` for `n` points, `k × n × 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    controls: usize,
    points: usize,
    degree: usize,
    source_frames: Option<usize>,
    data: Vec<f64>,
}

impl ControlGrid {
    pub fn new(controls: usize, points: usize, degree: usize, data: Vec<f64>) -> Result<Self> {
        if degree == 0 || controls < degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "{controls} control points cannot carry a degree-{degree} curve"
            )));
        }
        if points == 0 {
            return Err(Error::InvalidArgument("control grid needs at least one point".into()));
        }
        if data.len() != controls * points * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {controls}x{points}x3 control grid",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            controls,
            points,
            degree,
            source_frames: None,
            data,
        })
    }

    pub fn zeros(controls: usize, points: usize, degree: usize) -> Result<Self> {
        Self::new(controls, points, degree, vec![0.0; controls * points * 3])
    }

    pub fn with_source_frames(mut self, frames: Option<usize>) -> Self {
        self.source_frames = frames;
        self
    }

    pub fn controls(&self) -> usize {
        self.controls
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn source_frames(&self) -> Option<usize> {
        self.source_frames
    }

    pub fn width(&self) -> usize {
        self.points * 3
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, point: usize) -> [f64; 3] {
        let j = (i * self.points + point) * 3;
        [self.data[j], self.data[j + 1], self.data[j + 2]]
    }

    /// Keeps the listed points, in order.
    pub fn select_points(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.points) {
            return Err(Error::InvalidArgument(format!(
                "point index {bad} out of range {}",
                self.points
            )));
        }
        let mut data = Vec::with_capacity(self.controls * indices.len() * 3);
        for i in 0..self.controls {
            for &p in indices {
                data.extend_from_slice(&self.get(i, p));
            }
        }
        Ok(Self::new(self.controls, indices.len(), self.degree, data)?.with_source_frames(self.source_frames))
    }

    /// Appends copies of the last control row until there are `target` rows.
    pub fn pad_to(&self, target: usize) -> Result<Self> {
        if target < self.controls {
            return Err(Error::InvalidArgument(format!(
                "cannot pad {} control points down to {target}",
                self.controls
            )));
        }
        let mut data = self.data.clone();
        let last = self.row(self.controls - 1).to_vec();
        for _ in self.controls..target {
            data.extend_from_slice(&last);
        }
        Ok(Self {
            controls: target,
            data,
            ..self.clone()
        })
    }
}
