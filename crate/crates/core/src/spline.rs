//! Clamped uniform B-spline bases.
//!
//! Knots live on the normalized domain `[0, 1]` with `d + 1` repeated knots at
//! each end, so a curve interpolates its first and last control points. Basis
//! values are computed with the Cox–de Boor triangular table, which yields the
//! `d + 1` functions that are nonzero on a knot span in `O(d²)`.
//!
//! Frames of a `T`-frame sequence map uniformly onto the domain: frame `i`
//! sits at `i / (T - 1)`, and a single frame sits at `0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default spline degree (uniform cubic).
pub const DEFAULT_DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
    control_count: usize,
}

impl KnotVector {
    /// Clamped knot vector on `[0, 1]` with `k - d - 1` uniformly spaced
    /// interior knots.
    pub fn clamped_uniform(control_count: usize, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument("spline degree must be at least 1".into()));
        }
        if control_count < degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "{control_count} control points cannot carry a degree-{degree} curve (need at least {})",
                degree + 1
            )));
        }
        let segments = control_count - degree;
        let mut values = Vec::with_capacity(control_count + degree + 1);
        values.extend(std::iter::repeat_n(0.0, degree + 1));
        values.extend((1..segments).map(|j| j as f64 / segments as f64));
        values.extend(std::iter::repeat_n(1.0, degree + 1));
        debug_assert_eq!(values.len(), control_count + degree + 1);
        Ok(Self {
            values,
            degree,
            control_count,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn control_count(&self) -> usize {
        self.control_count
    }

    /// The clamped parameter domain `[u_d, u_{m-1-d}]`.
    pub fn domain(&self) -> (f64, f64) {
        let m = self.values.len();
        (self.values[self.degree], self.values[m - 1 - self.degree])
    }

    /// Interior knots (strictly inside the domain).
    pub fn interior(&self) -> &[f64] {
        &self.values[self.degree + 1..self.control_count]
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if t.is_nan() || t < lo || t > hi {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        Ok(())
    }

    /// Index `i` of the span `[u_i, u_{i+1})` holding `t`. The right endpoint
    /// belongs to the last nonempty span so that evaluation there takes the
    /// limit from the left.
    fn span(&self, t: f64) -> usize {
        let last = self.control_count - 1;
        if t >= self.values[last + 1] {
            return last;
        }
        // First index in [d, last] whose successor knot exceeds t.
        let upper = &self.values[self.degree + 1..=last + 1];
        self.degree + upper.partition_point(|&u| u <= t)
    }

    /// Nonzero basis values `N_{span-d..=span, d}(t)` via the triangular table.
    fn nonzero_basis(&self, span: usize, t: f64) -> Vec<f64> {
        let d = self.degree;
        let u = &self.values;
        let mut n = vec![0.0; d + 1];
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        n[0] = 1.0;
        for j in 1..=d {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }

    /// All `k` basis values `[N_{0,d}(t), …, N_{k-1,d}(t)]`.
    pub fn basis_values(&self, t: f64) -> Result<Vec<f64>> {
        self.check_domain(t)?;
        let span = self.span(t);
        let local = self.nonzero_basis(span, t);
        let mut out = vec![0.0; self.control_count];
        out[span - self.degree..=span].copy_from_slice(&local);
        Ok(out)
    }

    /// Derivatives of order `order` of every basis function at `t`.
    ///
    /// At interior knots this returns the right-sided derivative, at the right
    /// end of the domain the left-sided one.
    pub fn basis_derivative_values(&self, t: f64, order: usize) -> Result<Vec<f64>> {
        if order > self.degree {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} exceeds spline degree {}",
                self.degree
            )));
        }
        self.check_domain(t)?;
        let span = self.span(t);
        let local = self.nonzero_derivatives(span, t, order);
        let mut out = vec![0.0; self.control_count];
        out[span - self.degree..=span].copy_from_slice(&local[order]);
        Ok(out)
    }

    /// Rows `0..=order` of local basis derivatives on `span`.
    fn nonzero_derivatives(&self, span: usize, t: f64, order: usize) -> Vec<Vec<f64>> {
        let d = self.degree;
        let u = &self.values;
        // ndu[j][r] holds basis values above the diagonal and knot differences below.
        let mut ndu = vec![vec![0.0; d + 1]; d + 1];
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        ndu[0][0] = 1.0;
        for j in 1..=d {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; d + 1]; order + 1];
        for (j, row) in ndu.iter().enumerate() {
            ders[0][j] = row[d];
        }
        let mut a = vec![vec![0.0; d + 1]; 2];
        for r in 0..=d {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=order {
                let mut acc = 0.0;
                let rk = r as isize - k as isize;
                let pk = d - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    acc = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { d - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    acc += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    acc += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = acc;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = d as f64;
        for k in 1..=order {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (d - k) as f64;
        }
        ders
    }

    /// Evaluates `Σ N_i(t) p_i` for scalar control values.
    pub fn evaluate(&self, controls: &[f64], t: f64) -> Result<f64> {
        if controls.len() != self.control_count {
            return Err(Error::ShapeMismatch(format!(
                "{} control values for a {}-point basis",
                controls.len(),
                self.control_count
            )));
        }
        let basis = self.basis_values(t)?;
        Ok(basis.iter().zip(controls).map(|(b, p)| b * p).sum())
    }
}

/// Frame times for a `T`-frame sequence spread uniformly over `[0, 1]`.
pub fn uniform_sample_times(frames: usize) -> Vec<f64> {
    match frames {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let last = (frames - 1) as f64;
            (0..frames).map(|i| i as f64 / last).collect()
        }
    }
}

/// Basis functions sampled at a list of times, one row per time.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    matrix: DMatrix<f64>,
    sample_times: Vec<f64>,
    knots: KnotVector,
}

impl BasisMatrix {
    pub fn new(control_count: usize, degree: usize, sample_times: &[f64]) -> Result<Self> {
        if sample_times.is_empty() {
            return Err(Error::InvalidArgument(
                "basis matrix needs at least one sample time".into(),
            ));
        }
        let knots = KnotVector::clamped_uniform(control_count, degree)?;
        let mut matrix = DMatrix::zeros(sample_times.len(), control_count);
        for (row, &t) in sample_times.iter().enumerate() {
            let values = knots.basis_values(t)?;
            for (col, v) in values.into_iter().enumerate() {
                matrix[(row, col)] = v;
            }
        }
        Ok(Self {
            matrix,
            sample_times: sample_times.to_vec(),
            knots,
        })
    }

    /// Basis sampled at `frames` uniformly spaced times.
    pub fn uniform(control_count: usize, degree: usize, frames: usize) -> Result<Self> {
        Self::new(control_count, degree, &uniform_sample_times(frames))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn frames(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn control_count(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn degree(&self) -> usize {
        self.knots.degree
    }
}
