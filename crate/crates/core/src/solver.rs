//! Closed-form regularized least-squares fitting of control grids.
//!
//! For a `T × k` basis `B` and a trajectory `V` (`T × 3n`), the fit minimizes
//!
//! ```text
//! ‖B P − V‖²_F + μ ‖L P‖²_F
//! ```
//!
//! where `L` is the `(k−2) × k` interior second-difference stencil. The
//! minimizer is `P = O V` with `O = (BᵀB + μLᵀL)⁻¹ Bᵀ`. `O` is obtained from
//! one Cholesky factorization of the `k × k` Gram matrix and is then applied
//! to all `3n` columns at once.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::grid::{ControlGrid, TrajectoryGrid};
use crate::linalg::apply_rows;
use crate::spline::BasisMatrix;

pub const DEFAULT_CONTROLS: usize = 16;
pub const DEFAULT_MU: f64 = 1e-3;
/// Smallest weight used when a fit is underdetermined (`T < k`).
pub const MIN_UNDERDETERMINED_MU: f64 = 1e-6;

/// Interior second-difference stencil `[1, −2, 1]`, one row per interior control.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondDifferenceMatrix {
    entries: DMatrix<f64>,
}

impl SecondDifferenceMatrix {
    pub fn new(controls: usize) -> Result<Self> {
        if controls < 3 {
            return Err(Error::InvalidArgument(format!(
                "second difference needs at least 3 control points, got {controls}"
            )));
        }
        let mut entries = DMatrix::zeros(controls - 2, controls);
        for r in 0..controls - 2 {
            entries[(r, r)] = 1.0;
            entries[(r, r + 1)] = -2.0;
            entries[(r, r + 2)] = 1.0;
        }
        Ok(Self { entries })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `LᵀL`, or the zero matrix when `k < 3` and no interior stencil exists.
    pub fn gram(controls: usize) -> DMatrix<f64> {
        match Self::new(controls) {
            Ok(l) => l.entries.transpose() * &l.entries,
            Err(_) => DMatrix::zeros(controls, controls),
        }
    }
}

/// Penalty added to `BᵀB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regularizer {
    /// `μ LᵀL`, smoothing consecutive control points.
    Laplacian,
    /// `μ I`, classic ridge shrinkage.
    Ridge,
}

/// Precomputed `O_{T,k} = (BᵀB + μR)⁻¹Bᵀ`.
#[derive(Debug, Clone)]
pub struct FittingOperator {
    operator: DMatrix<f64>,
    mu: f64,
    regularizer: Regularizer,
    basis: BasisMatrix,
    gram_factor: DMatrix<f64>,
}

impl FittingOperator {
    /// Laplacian-regularized operator.
    pub fn new(basis: BasisMatrix, mu: f64) -> Result<Self> {
        Self::with_regularizer(basis, mu, Regularizer::Laplacian)
    }

    pub fn with_regularizer(basis: BasisMatrix, mu: f64, regularizer: Regularizer) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "regularization weight must be finite and >= 0, got {mu}"
            )));
        }
        let frames = basis.frames();
        let controls = basis.control_count();
        if mu == 0.0 && frames < controls {
            return Err(Error::Underdetermined { frames, controls });
        }
        let not_pd = || Error::NotPositiveDefinite { frames, controls, mu };
        // With one frame, B sees only p₀, and linear ramps vanishing at p₀ lie in
        // the null space of both B and L.
        if regularizer == Regularizer::Laplacian && frames == 1 && controls > 1 {
            return Err(not_pd());
        }

        let b = basis.matrix();
        let bt = b.transpose();
        let penalty = match regularizer {
            Regularizer::Laplacian => SecondDifferenceMatrix::gram(controls),
            Regularizer::Ridge => DMatrix::identity(controls, controls),
        };
        let gram = &bt * b + penalty * mu;
        let chol: Cholesky<f64, Dyn> = Cholesky::new(gram.clone()).ok_or_else(not_pd)?;
        if chol.l_dirty().diagonal().iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(not_pd());
        }
        let mut operator = chol.solve(&bt);
        // One step of iterative refinement on G·O = Bᵀ.
        let residual = &bt - &gram * &operator;
        operator += chol.solve(&residual);
        let gram_factor = chol.l();

        Ok(Self {
            operator,
            mu,
            regularizer,
            basis,
            gram_factor,
        })
    }

    /// The dense `k × T` operator.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    pub fn basis(&self) -> &BasisMatrix {
        &self.basis
    }

    /// Lower-triangular Cholesky factor of the regularized Gram matrix.
    pub fn gram_factor(&self) -> &DMatrix<f64> {
        &self.gram_factor
    }

    /// The regularized Gram matrix `BᵀB + μR`, rebuilt from its parts.
    pub fn gram(&self) -> DMatrix<f64> {
        let b = self.basis.matrix();
        let k = self.basis.control_count();
        let penalty = match self.regularizer {
            Regularizer::Laplacian => SecondDifferenceMatrix::gram(k),
            Regularizer::Ridge => DMatrix::identity(k, k),
        };
        b.transpose() * b + penalty * self.mu
    }

    pub fn frames(&self) -> usize {
        self.basis.frames()
    }

    pub fn control_count(&self) -> usize {
        self.basis.control_count()
    }

    /// `P = O V`, independently for every point and coordinate.
    pub fn fit(&self, traj: &TrajectoryGrid) -> Result<ControlGrid> {
        if traj.frames() != self.frames() {
            return Err(Error::ShapeMismatch(format!(
                "operator built for {} frames applied to a {}-frame trajectory",
                self.frames(),
                traj.frames()
            )));
        }
        let width = traj.width();
        let data = match self.regularizer {
            // O maps constants to themselves, so fitting V − V₀ and adding V₀ back
            // is the same map, and reproduces constant columns without rounding.
            Regularizer::Laplacian => {
                let anchor = traj.frame(0);
                let centered: Vec<f64> = traj
                    .as_slice()
                    .chunks_exact(width)
                    .flat_map(|row| row.iter().zip(anchor).map(|(v, a)| v - a))
                    .collect();
                let mut data = apply_rows(&self.operator, &centered, width);
                for row in data.chunks_exact_mut(width) {
                    for (v, a) in row.iter_mut().zip(anchor) {
                        *v += a;
                    }
                }
                data
            }
            Regularizer::Ridge => apply_rows(&self.operator, traj.as_slice(), width),
        };
        Ok(
            ControlGrid::new(self.control_count(), traj.points(), self.basis.degree(), data)?
                .with_source_frames(Some(traj.frames())),
        )
    }

    /// Frobenius norm of the normal-equation residual `Bᵀ(BP − V) + μRP`.
    pub fn stationarity_residual(&self, traj: &TrajectoryGrid, controls: &ControlGrid) -> Result<f64> {
        check_pair(&self.basis, traj, controls)?;
        let gram = self.gram();
        let width = traj.width();
        let gp = apply_rows(&gram, controls.as_slice(), width);
        let btv = apply_rows(&self.basis.matrix().transpose(), traj.as_slice(), width);
        Ok(gp.iter().zip(&btv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }
}

fn check_pair(basis: &BasisMatrix, traj: &TrajectoryGrid, controls: &ControlGrid) -> Result<()> {
    if traj.frames() != basis.frames()
        || controls.controls() != basis.control_count()
        || traj.points() != controls.points()
    {
        return Err(Error::ShapeMismatch(format!(
            "basis {}x{}, trajectory {}x{}, controls {}x{}",
            basis.frames(),
            basis.control_count(),
            traj.frames(),
            traj.points(),
            controls.controls(),
            controls.points()
        )));
    }
    Ok(())
}

/// Value of `‖BP − V‖²_F + μ‖LP‖²_F` for any candidate control grid.
pub fn laplacian_objective(basis: &BasisMatrix, mu: f64, traj: &TrajectoryGrid, controls: &ControlGrid) -> Result<f64> {
    check_pair(basis, traj, controls)?;
    let width = traj.width();
    let fitted = apply_rows(basis.matrix(), controls.as_slice(), width);
    let data: f64 = fitted.iter().zip(traj.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    let smooth = match SecondDifferenceMatrix::new(controls.controls()) {
        Ok(l) => apply_rows(l.matrix(), controls.as_slice(), width)
            .iter()
            .map(|v| v * v)
            .sum(),
        Err(_) => 0.0,
    };
    Ok(data + mu * smooth)
}

/// Laplacian-regularized fit with a one-off operator.
pub fn fit_control_points(op: &FittingOperator, traj: &TrajectoryGrid) -> Result<ControlGrid> {
    op.fit(traj)
}

/// Ridge-regularized fit (`LᵀL` replaced by the identity).
pub fn fit_ridge(basis: &BasisMatrix, mu: f64, traj: &TrajectoryGrid) -> Result<ControlGrid> {
    FittingOperator::with_regularizer(basis.clone(), mu, Regularizer::Ridge)?.fit(traj)
}

/// Evaluates control points at `frames` uniformly spaced times.
pub fn reproject(controls: &ControlGrid, frames: usize) -> Result<TrajectoryGrid> {
    if frames == 0 {
        return Err(Error::InvalidArgument("reprojection needs at least one frame".into()));
    }
    let basis = BasisMatrix::uniform(controls.controls(), controls.degree(), frames)?;
    reproject_with(&basis, controls)
}

/// `B P` for a prebuilt basis.
pub fn reproject_with(basis: &BasisMatrix, controls: &ControlGrid) -> Result<TrajectoryGrid> {
    if basis.control_count() != controls.controls() {
        return Err(Error::ShapeMismatch(format!(
            "{}-point basis applied to {} control points",
            basis.control_count(),
            controls.controls()
        )));
    }
    let data = apply_rows(basis.matrix(), controls.as_slice(), controls.width());
    TrajectoryGrid::new(basis.frames(), controls.points(), data)
}

/// Effective weight for a `T`-frame fit: rejects `μ = 0` when `T < k`, and
/// lifts tiny positive weights to [`MIN_UNDERDETERMINED_MU`] in that regime.
pub fn effective_mu(frames: usize, controls: usize, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "regularization weight must be finite and >= 0, got {mu}"
        )));
    }
    if frames < controls {
        if mu == 0.0 {
            return Err(Error::Underdetermined { frames, controls });
        }
        return Ok(mu.max(MIN_UNDERDETERMINED_MU));
    }
    Ok(mu)
}

/// Fits a trajectory of any length to `k` control points.
pub fn fit_variable_sequence(traj: &TrajectoryGrid, controls: usize, degree: usize, mu: f64) -> Result<ControlGrid> {
    Fitter::new(controls, degree, mu).fit(traj)
}

type CacheKey = (usize, usize, usize, u64);

/// Fits sequences of varying length with one cached operator per `(T, k, d, μ)`.
#[derive(Debug)]
pub struct Fitter {
    controls: usize,
    degree: usize,
    mu: f64,
    cache: Mutex<HashMap<CacheKey, Arc<FittingOperator>>>,
}

impl Fitter {
    pub fn new(controls: usize, degree: usize, mu: f64) -> Self {
        Self {
            controls,
            degree,
            mu,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn controls(&self) -> usize {
        self.controls
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Operator for a `T`-frame sequence, built on first use.
    pub fn operator(&self, frames: usize) -> Result<Arc<FittingOperator>> {
        let mu = effective_mu(frames, self.controls, self.mu)?;
        let key = (frames, self.controls, self.degree, mu.to_bits());
        if let Some(op) = self.cache.lock().expect("operator cache poisoned").get(&key) {
            return Ok(Arc::clone(op));
        }
        let basis = BasisMatrix::uniform(self.controls, self.degree, frames)?;
        let op = Arc::new(FittingOperator::new(basis, mu)?);
        self.cache
            .lock()
            .expect("operator cache poisoned")
            .insert(key, Arc::clone(&op));
        Ok(op)
    }

    pub fn fit(&self, traj: &TrajectoryGrid) -> Result<ControlGrid> {
        // The regularizer leaves a single sample's minimizer non-unique; take the
        // constant extension.
        if traj.frames() == 1 {
            effective_mu(1, self.controls, self.mu)?;
            let row = traj.frame(0);
            let data: Vec<f64> = (0..self.controls).flat_map(|_| row.iter().copied()).collect();
            return Ok(ControlGrid::new(self.controls, traj.points(), self.degree, data)?.with_source_frames(Some(1)));
        }
        self.operator(traj.frames())?.fit(traj)
    }
}
