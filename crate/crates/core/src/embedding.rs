//! Multi-level control-point embedding.
//!
//! A schedule of decreasing control counts `[k_s, …, k_0]` links each pair of
//! adjacent levels by a transport `T_i = O_{T',k_i} B_{T',k_{i-1}}` that lifts a
//! coarse grid to the finer resolution. A fine grid splits into its projection
//! onto the coarse level, `T_i⁺ P`, and a residual `(I − T_i T_i⁺) P` that the
//! coarse level cannot represent. Chaining the split down to `k_0` and stacking
//! the residuals (finest first) with the coarsest coefficients gives a single
//! linear map `W` with `E = W P`. Reconstruction runs the recursion upward,
//! `P_i = T_i P_{i-1} + R_i`, which is exact by construction.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::ControlGrid;
use crate::linalg::{apply_rows, identity, pseudo_inverse};
use crate::solver::{FittingOperator, DEFAULT_MU};
use crate::spline::{BasisMatrix, DEFAULT_DEGREE};

pub const DEFAULT_SCHEDULE: [usize; 8] = [17, 15, 13, 11, 9, 7, 5, 4];
pub const DEFAULT_REFERENCE_FRAMES: usize = 16;
/// Singular values below this fraction of the largest are treated as zero.
pub const PINV_CUTOFF: f64 = 1e-10;
/// Transports with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSchedule {
    counts: Vec<usize>,
    reference_frames: usize,
    degree: usize,
}

impl Default for LevelSchedule {
    fn default() -> Self {
        Self {
            counts: DEFAULT_SCHEDULE.to_vec(),
            reference_frames: DEFAULT_REFERENCE_FRAMES,
            degree: DEFAULT_DEGREE,
        }
    }
}

impl LevelSchedule {
    pub fn new(counts: Vec<usize>, reference_frames: usize, degree: usize) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidArgument(
                "a level schedule needs at least two levels".into(),
            ));
        }
        if counts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "level counts {counts:?} are not strictly decreasing"
            )));
        }
        let coarsest = *counts.last().expect("nonempty");
        if coarsest < degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "coarsest level {coarsest} cannot carry a degree-{degree} curve"
            )));
        }
        if reference_frames < 2 {
            return Err(Error::InvalidArgument(
                "reference frame count must be at least 2".into(),
            ));
        }
        Ok(Self {
            counts,
            reference_frames,
            degree,
        })
    }

    /// Counts from finest to coarsest.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn finest(&self) -> usize {
        self.counts[0]
    }

    pub fn coarsest(&self) -> usize {
        *self.counts.last().expect("nonempty")
    }

    pub fn reference_frames(&self) -> usize {
        self.reference_frames
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `Σ k_i`, the row count of the stacked embedding.
    pub fn total_rows(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Coarse-to-fine lift `T` (`k_fine × k_coarse`) with its pseudo-inverse.
#[derive(Debug, Clone)]
pub struct TransportOperator {
    matrix: DMatrix<f64>,
    pseudo_inverse: DMatrix<f64>,
    condition: f64,
}

impl TransportOperator {
    pub fn new(fine: usize, coarse: usize, reference_frames: usize, mu: f64, degree: usize) -> Result<Self> {
        if fine < coarse {
            return Err(Error::InvalidArgument(format!(
                "transport must lift to a finer level ({coarse} -> {fine})"
            )));
        }
        let fit = FittingOperator::new(BasisMatrix::uniform(fine, degree, reference_frames)?, mu)?;
        let coarse_basis = BasisMatrix::uniform(coarse, degree, reference_frames)?;
        let matrix = fit.matrix() * coarse_basis.matrix();
        let (pseudo_inverse, sigma) = pseudo_inverse(&matrix, PINV_CUTOFF)?;
        let max = sigma.iter().copied().fold(0.0_f64, f64::max);
        let min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned {
                fine,
                coarse,
                condition,
            });
        }
        Ok(Self {
            matrix,
            pseudo_inverse,
            condition,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.pseudo_inverse
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn fine(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn coarse(&self) -> usize {
        self.matrix.ncols()
    }

    /// `I − T T⁺`, the projector onto what the coarse level cannot express.
    pub fn anti_projector(&self) -> DMatrix<f64> {
        identity(self.fine()) - &self.matrix * &self.pseudo_inverse
    }
}

/// The stacked map `W` together with the transports it was derived from.
#[derive(Debug, Clone)]
pub struct EmbeddingBasis {
    matrix: DMatrix<f64>,
    transports: Vec<TransportOperator>,
    schedule: LevelSchedule,
    mu: f64,
}

impl EmbeddingBasis {
    pub fn new(schedule: LevelSchedule, mu: f64) -> Result<Self> {
        let finest = schedule.finest();
        let transports = schedule
            .counts()
            .windows(2)
            .map(|w| TransportOperator::new(w[0], w[1], schedule.reference_frames(), mu, schedule.degree()))
            .collect::<Result<Vec<_>>>()?;

        let mut blocks = Vec::with_capacity(transports.len() + 1);
        // Maps the finest grid to the current level.
        let mut chain = identity(finest);
        for transport in &transports {
            blocks.push(transport.anti_projector() * &chain);
            chain = transport.pseudo_inverse() * chain;
        }
        blocks.push(chain);

        let mut matrix = DMatrix::zeros(schedule.total_rows(), finest);
        let mut row = 0;
        for block in &blocks {
            matrix.view_mut((row, 0), (block.nrows(), finest)).copy_from(block);
            row += block.nrows();
        }
        Ok(Self {
            matrix,
            transports,
            schedule,
            mu,
        })
    }

    /// `(Σ k_i) × k_s` stacked basis.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Transports from finest (`T_s`) to coarsest (`T_1`).
    pub fn transports(&self) -> &[TransportOperator] {
        &self.transports
    }

    pub fn schedule(&self) -> &LevelSchedule {
        &self.schedule
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `E = W P`, split into levels.
    pub fn embed(&self, controls: &ControlGrid) -> Result<EmbeddingStack> {
        if controls.controls() != self.schedule.finest() {
            return Err(Error::ShapeMismatch(format!(
                "embedding expects {} control points, got {}",
                self.schedule.finest(),
                controls.controls()
            )));
        }
        let width = controls.width();
        let flat = apply_rows(&self.matrix, controls.as_slice(), width);
        EmbeddingStack::from_flat(self.schedule.clone(), controls.points(), controls.degree(), flat)
    }

    /// Inverse of [`embed`](Self::embed): `P_i = T_i P_{i-1} + R_i` from the coarsest level up.
    pub fn reconstruct(&self, stack: &EmbeddingStack) -> Result<ControlGrid> {
        if stack.schedule.counts() != self.schedule.counts() {
            return Err(Error::ShapeMismatch(format!(
                "stack schedule {:?} does not match basis schedule {:?}",
                stack.schedule.counts(),
                self.schedule.counts()
            )));
        }
        let width = stack.points * 3;
        let mut current = stack.coarsest().to_vec();
        for (level, transport) in self.transports.iter().enumerate().rev() {
            let mut lifted = apply_rows(transport.matrix(), &current, width);
            for (v, r) in lifted.iter_mut().zip(stack.residual(level)) {
                *v += r;
            }
            current = lifted;
        }
        ControlGrid::new(self.schedule.finest(), stack.points, stack.degree, current)
    }
}

/// Per-level residuals (finest first) followed by the coarsest coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStack {
    schedule: LevelSchedule,
    points: usize,
    degree: usize,
    /// `Σ k_i` rows of `3n` values.
    data: Vec<f64>,
}

impl EmbeddingStack {
    pub fn from_flat(schedule: LevelSchedule, points: usize, degree: usize, data: Vec<f64>) -> Result<Self> {
        let expected = schedule.total_rows() * points * 3;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{points}x3 embedding",
                data.len(),
                schedule.total_rows()
            )));
        }
        Ok(Self {
            schedule,
            points,
            degree,
            data,
        })
    }

    pub fn schedule(&self) -> &LevelSchedule {
        &self.schedule
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Number of residual levels (`s`).
    pub fn levels(&self) -> usize {
        self.schedule.counts().len() - 1
    }

    fn block_range(&self, index: usize) -> std::ops::Range<usize> {
        let width = self.points * 3;
        let start: usize = self.schedule.counts()[..index].iter().sum();
        let rows = self.schedule.counts()[index];
        start * width..(start + rows) * width
    }

    /// Residual of level `index`, where 0 is the finest (`R_s`).
    pub fn residual(&self, index: usize) -> &[f64] {
        assert!(index < self.levels(), "residual level {index} out of range");
        &self.data[self.block_range(index)]
    }

    pub fn residual_mut(&mut self, index: usize) -> &mut [f64] {
        assert!(index < self.levels(), "residual level {index} out of range");
        let range = self.block_range(index);
        &mut self.data[range]
    }

    /// `P_{k_0}`.
    pub fn coarsest(&self) -> &[f64] {
        &self.data[self.block_range(self.levels())]
    }
}

/// Builds `W` for a schedule with the library-default weight.
pub fn build_embedding_basis(schedule: LevelSchedule, mu: f64) -> Result<EmbeddingBasis> {
    EmbeddingBasis::new(schedule, mu)
}

pub fn embed(controls: &ControlGrid, basis: &EmbeddingBasis) -> Result<EmbeddingStack> {
    basis.embed(controls)
}

pub fn reconstruct_from_embedding(stack: &EmbeddingStack, basis: &EmbeddingBasis) -> Result<ControlGrid> {
    basis.reconstruct(stack)
}

/// Pads a grid to the finest level by replicating its last control point.
pub fn pad_control_points(controls: &ControlGrid, target: usize) -> Result<ControlGrid> {
    controls.pad_to(target)
}

impl Default for EmbeddingBasis {
    fn default() -> Self {
        Self::new(LevelSchedule::default(), DEFAULT_MU).expect("default schedule is well conditioned")
    }
}
