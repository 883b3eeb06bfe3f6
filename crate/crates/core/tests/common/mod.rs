//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Textbook recursive Cox–de Boor evaluation of `N_{i,p}(t)` with the
/// right endpoint assigned to the last non-empty span.
pub fn cox_de_boor(knots: &[f64], i: usize, p: usize, t: f64) -> f64 {
    if p == 0 {
        let (a, b) = (knots[i], knots[i + 1]);
        let last = *knots.last().unwrap();
        if t == last {
            // Closed on the right for the final non-empty interval.
            return if a < b && b == last { 1.0 } else { 0.0 };
        }
        return if a <= t && t < b { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += (t - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, t);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + p + 1] - t) / d2 * cox_de_boor(knots, i + 1, p - 1, t);
    }
    v
}

/// Clamped uniform knots built from the definition.
pub fn clamped_knots(k: usize, d: usize) -> Vec<f64> {
    let segments = k - d;
    let mut knots = vec![0.0; d + 1];
    for j in 1..segments {
        knots.push(j as f64 / segments as f64);
    }
    knots.extend(std::iter::repeat_n(1.0, d + 1));
    knots
}

/// Dense row-major matrix as nested vectors.
pub type Dense = Vec<Vec<f64>>;

pub fn basis_dense(k: usize, d: usize, frames: usize) -> Dense {
    let knots = clamped_knots(k, d);
    (0..frames)
        .map(|f| {
            let t = if frames == 1 {
                0.0
            } else {
                f as f64 / (frames - 1) as f64
            };
            (0..k).map(|i| cox_de_boor(&knots, i, d, t)).collect()
        })
        .collect()
}

pub fn second_difference_dense(k: usize) -> Dense {
    (0..k.saturating_sub(2))
        .map(|r| {
            let mut row = vec![0.0; k];
            row[r] = 1.0;
            row[r + 1] = -2.0;
            row[r + 2] = 1.0;
            row
        })
        .collect()
}

pub fn transpose(a: &Dense) -> Dense {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| (0..cols).map(|j| (0..inner).map(|l| row[l] * b[l][j]).sum()).collect())
        .collect()
}

/// `BᵀB + μ LᵀL`, or `+ μ I` when `ridge`.
pub fn normal_matrix(b: &Dense, k: usize, mu: f64, ridge: bool) -> Dense {
    let bt = transpose(b);
    let mut a = matmul(&bt, b);
    if ridge {
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += mu;
        }
    } else {
        let l = second_difference_dense(k);
        if !l.is_empty() {
            let ltl = matmul(&transpose(&l), &l);
            for i in 0..k {
                for j in 0..k {
                    a[i][j] += mu * ltl[i][j];
                }
            }
        }
    }
    a
}

/// Solves `A X = R` by Gaussian elimination with partial pivoting, followed by
/// one step of iterative refinement.
pub fn gaussian_solve(a: &Dense, rhs: &Dense) -> Dense {
    let once = |r: &Dense| -> Dense {
        let n = a.len();
        let m = r[0].len();
        let mut aa = a.clone();
        let mut rr = r.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| aa[x][col].abs().total_cmp(&aa[y][col].abs()))
                .unwrap();
            aa.swap(col, pivot);
            rr.swap(col, pivot);
            for row in col + 1..n {
                let f = aa[row][col] / aa[col][col];
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    aa[row][j] -= f * aa[col][j];
                }
                for j in 0..m {
                    rr[row][j] -= f * rr[col][j];
                }
            }
        }
        let mut x = vec![vec![0.0; m]; n];
        for row in (0..n).rev() {
            for j in 0..m {
                let mut s = rr[row][j];
                for l in row + 1..n {
                    s -= aa[row][l] * x[l][j];
                }
                x[row][j] = s / aa[row][row];
            }
        }
        x
    };
    let mut x = once(rhs);
    let ax = matmul(a, &x);
    let resid: Dense = rhs
        .iter()
        .zip(&ax)
        .map(|(r, q)| r.iter().zip(q).map(|(a, b)| a - b).collect())
        .collect();
    let dx = once(&resid);
    for (row, d) in x.iter_mut().zip(&dx) {
        for (v, e) in row.iter_mut().zip(d) {
            *v += e;
        }
    }
    x
}

/// Minimizes `‖B P − V‖² + μ ‖L P‖²` (or ridge) column by column with
/// restarted conjugate gradients driven only by objective gradients.
pub fn cg_minimize(b: &Dense, v: &Dense, k: usize, mu: f64, ridge: bool) -> Dense {
    let l = second_difference_dense(k);
    let grad = |p: &[f64], col: usize| -> Vec<f64> {
        // ∇ = 2Bᵀ(BP − V) + 2μ LᵀLP (or 2μP).
        let mut g = vec![0.0; k];
        for (row, target) in b.iter().zip(v) {
            let r: f64 = row.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() - target[col];
            for i in 0..k {
                g[i] += 2.0 * row[i] * r;
            }
        }
        if ridge {
            for i in 0..k {
                g[i] += 2.0 * mu * p[i];
            }
        } else {
            for row in &l {
                let r: f64 = row.iter().zip(p).map(|(a, x)| a * x).sum();
                for i in 0..k {
                    g[i] += 2.0 * mu * row[i] * r;
                }
            }
        }
        g
    };
    let width = v[0].len();
    let mut out = vec![vec![0.0; width]; k];
    for col in 0..width {
        let mut p = vec![0.0; k];
        let g0 = grad(&vec![0.0; k], col);
        let g0n: f64 = g0.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _restart in 0..50 {
            let mut g = grad(&p, col);
            let mut dir: Vec<f64> = g.iter().map(|x| -x).collect();
            let mut gg: f64 = g.iter().map(|x| x * x).sum();
            for _ in 0..4 * k {
                if gg.sqrt() <= 1e-15 * g0n.max(1e-300) {
                    break;
                }
                // Exact line search on the quadratic: H d = ∇(p + d) − ∇(p).
                let shifted: Vec<f64> = p.iter().zip(&dir).map(|(a, b)| a + b).collect();
                let hd: Vec<f64> = grad(&shifted, col).iter().zip(&g).map(|(a, b)| a - b).collect();
                let dhd: f64 = dir.iter().zip(&hd).map(|(a, b)| a * b).sum();
                if dhd <= 0.0 {
                    break;
                }
                let alpha = gg / dhd;
                for i in 0..k {
                    p[i] += alpha * dir[i];
                }
                g = grad(&p, col);
                let gg_new: f64 = g.iter().map(|x| x * x).sum();
                let beta = gg_new / gg;
                for i in 0..k {
                    dir[i] = -g[i] + beta * dir[i];
                }
                gg = gg_new;
            }
            if gg.sqrt() <= 1e-15 * g0n.max(1e-300) {
                break;
            }
        }
        for i in 0..k {
            out[i][col] = p[i];
        }
    }
    out
}

pub fn brute_knn(points: &[[f64; 3]], k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(points.len() * k);
    for (i, p) in points.iter().enumerate() {
        let mut d: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, q)| ((0..3).map(|c| (p[c] - q[c]).powi(2)).sum(), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.extend(d.iter().take(k).map(|x| x.1));
    }
    out
}

pub fn brute_fps(points: &[[f64; 3]], target: usize, start: usize) -> Vec<usize> {
    let mut chosen = vec![start];
    while chosen.len() < target {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, p) in points.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let m = chosen
                .iter()
                .map(|&c| (0..3).map(|x| (p[x] - points[c][x]).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if m > best.0 {
                best = (m, i);
            }
        }
        chosen.push(best.1);
    }
    chosen
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
        .collect()
}

/// Uniformly distributed rotation from a random unit quaternion.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            break q.map(|x| x / n);
        }
    };
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

pub fn rotate(r: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2])
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
