//! Small dense helpers shared by the solver and the embedding.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Column block width for [`apply_rows`]; a block of a 200-frame input stays in L2.
const BLOCK: usize = 256;

/// Computes `op · src` where `src` is a row-major `op.ncols() × width` array.
///
/// Every output element accumulates over the inner dimension in index order,
/// independently of how columns are blocked or scheduled, so results are
/// bitwise identical for any worker count and any column subset.
pub fn apply_rows(op: &DMatrix<f64>, src: &[f64], width: usize) -> Vec<f64> {
    let (rows, inner) = op.shape();
    assert_eq!(src.len(), inner * width, "operand is not {inner}x{width}");
    if width == 0 || rows == 0 {
        return vec![0.0; rows * width];
    }
    // Row-major copy of the operator for contiguous access.
    let weights: Vec<f64> = (0..rows)
        .flat_map(|r| (0..inner).map(move |c| (r, c)))
        .map(|(r, c)| op[(r, c)])
        .collect();

    let blocks: Vec<usize> = (0..width).step_by(BLOCK).collect();
    let computed: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|&start| {
            let bw = BLOCK.min(width - start);
            let mut out = vec![0.0; rows * bw];
            for (r, acc) in out.chunks_exact_mut(bw).enumerate() {
                let wrow = &weights[r * inner..(r + 1) * inner];
                for (t, &w) in wrow.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let s = &src[t * width + start..t * width + start + bw];
                    for (a, &x) in acc.iter_mut().zip(s) {
                        *a += w * x;
                    }
                }
            }
            out
        })
        .collect();

    let mut out = vec![0.0; rows * width];
    for (&start, block) in blocks.iter().zip(&computed) {
        let bw = BLOCK.min(width - start);
        for r in 0..rows {
            out[r * width + start..r * width + start + bw].copy_from_slice(&block[r * bw..(r + 1) * bw]);
        }
    }
    out
}

/// Moore–Penrose pseudo-inverse from a thin SVD, discarding singular values
/// below `rel_cutoff × σ_max`. Also returns the singular values.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_cutoff: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd = m.clone().svd(true, true);
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let max = sigma.iter().copied().fold(0.0_f64, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let cutoff = rel_cutoff * max;
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let mut pinv = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let vi = v_t.row(i).transpose();
            let ui = u.column(i).transpose();
            pinv += (vi * ui) / s;
        }
    }
    Ok((pinv, sigma))
}

pub(crate) fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}
