//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even when
//! all criteria pass. Exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::*;
use splinemotion::archive::{decode, encode, Archive};
use splinemotion::dataset::{DatasetManifest, ManifestEntry, MeshFormat};
use splinemotion::embedding::EmbeddingBasis;
use splinemotion::metrics::{self, MetricConfig};
use splinemotion::sampling::{sample_surface, MeshSequence};
use splinemotion::solver::{self, Fitter, FittingOperator};
use splinemotion::spatial::{farthest_point_sample, knn};
use splinemotion::synthetic::BandLimited;
use splinemotion::timing::bench_fit;
use splinemotion::{BasisMatrix, ControlGrid, KnotVector, TrajectoryGrid};

enum Verdict {
    Pass,
    Fail,
    /// Measured and reported without failing the suite.
    Report,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_traj(r: &mut ChaCha8Rng, frames: usize, points: usize) -> TrajectoryGrid {
    TrajectoryGrid::from_fn(frames, points, |_, _| {
        std::array::from_fn(|_| r.random_range(-1.0..1.0))
    })
    .unwrap()
}

fn random_controls(r: &mut ChaCha8Rng, k: usize, points: usize, degree: usize) -> ControlGrid {
    let data = (0..k * points * 3).map(|_| r.random_range(-1.0..1.0)).collect();
    ControlGrid::new(k, points, degree, data).unwrap()
}

fn to_dense(data: &[f64], rows: usize) -> Dense {
    let width = data.len() / rows;
    data.chunks(width).map(|c| c.to_vec()).collect()
}

fn flatten(d: &Dense) -> Vec<f64> {
    d.iter().flatten().copied().collect()
}

fn basis_correctness() -> Outcome {
    let mut r = rng(1);
    let (mut worst_sum, mut worst_neg, mut worst_end, mut worst_limit) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut support_violations = 0;
    for probe in 0..1000 {
        let k = r.random_range(4..=32);
        let d = r.random_range(1..=3);
        let knots = KnotVector::clamped_uniform(k, d).unwrap();
        let t = match probe % 10 {
            0 => 0.0,
            1 => 1.0,
            // Land exactly on an interior knot now and then.
            2 if !knots.interior().is_empty() => knots.interior()[r.random_range(0..knots.interior().len())],
            _ => r.random_range(0.0..=1.0),
        };
        let n = knots.basis_values(t).unwrap();
        worst_sum = worst_sum.max((n.iter().sum::<f64>() - 1.0).abs());
        worst_neg = worst_neg.max(n.iter().map(|&v| -v).fold(0.0, f64::max));
        // Only the d+1 functions on the containing span may be non-zero.
        let vals = knots.values();
        let span = (d..k)
            .rev()
            .find(|&s| vals[s] <= t && (t < vals[s + 1] || (t == 1.0 && vals[s + 1] == 1.0)))
            .unwrap();
        support_violations += n
            .iter()
            .enumerate()
            .filter(|&(i, &v)| (i + d < span || i > span) && v != 0.0)
            .count();
        let eps = 1e-12;
        let start = knots.basis_values(0.0).unwrap();
        let end = knots.basis_values(1.0).unwrap();
        let near_start = knots.basis_values(eps).unwrap();
        let near_end = knots.basis_values(1.0 - eps).unwrap();
        worst_end = worst_end.max((start[0] - 1.0).abs()).max((end[k - 1] - 1.0).abs());
        worst_limit = worst_limit
            .max((near_start[0] - 1.0).abs())
            .max((near_end[k - 1] - 1.0).abs());
    }
    judge(
        worst_sum <= 1e-12 && worst_neg <= 1e-12 && worst_end <= 1e-12 && worst_limit <= 1e-9 && support_violations == 0,
        format!(
            "partition err {worst_sum:.1e}, negativity {worst_neg:.1e}, endpoint err {worst_end:.1e}, endpoint limit err {worst_limit:.1e}, support violations {support_violations}"
        ),
    )
}

fn solver_vs_oracles() -> Outcome {
    let mut r = rng(2);
    let (mut worst_ge, mut worst_cg, mut worst_stat) = (0.0f64, 0.0f64, 0.0f64);
    let mut cases = 0;
    for _ in 0..50 {
        let frames = r.random_range(4..=64);
        let k = r.random_range(4..=24);
        let traj = random_traj(&mut r, frames, 2);
        for mu in [0.0, 1e-4, 1e-2] {
            if mu == 0.0 && frames < k {
                continue;
            }
            cases += 1;
            let op = FittingOperator::new(BasisMatrix::uniform(k, 3, frames).unwrap(), mu).unwrap();
            let fit = op.fit(&traj).unwrap();
            let b = basis_dense(k, 3, frames);
            let v = to_dense(traj.as_slice(), frames);
            let a = normal_matrix(&b, k, mu, false);
            let rhs = matmul(&transpose(&b), &v);
            let ge = flatten(&gaussian_solve(&a, &rhs));
            let cg = flatten(&cg_minimize(&b, &v, k, mu, false));
            let scale = frobenius(&ge).max(1e-300);
            worst_ge = worst_ge.max(diff_norm(fit.as_slice(), &ge) / scale);
            worst_cg = worst_cg.max(diff_norm(fit.as_slice(), &cg) / scale);
            let stat = op.stationarity_residual(&traj, &fit).unwrap();
            let a_norm = frobenius(&flatten(&a));
            worst_stat = worst_stat.max(stat / (a_norm * frobenius(fit.as_slice()) + frobenius(&flatten(&rhs))));
        }
    }
    judge(
        worst_ge <= 1e-8 && worst_cg <= 1e-5 && worst_stat <= 1e-8,
        format!("{cases} fits: vs elimination {worst_ge:.1e}, vs conjugate gradients {worst_cg:.1e}, scaled stationarity {worst_stat:.1e}"),
    )
}

fn exact_recovery() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let k = r.random_range(4..=24);
        let frames = r.random_range(k..=120);
        let truth = random_controls(&mut r, k, 4, 3);
        let traj = solver::reproject(&truth, frames).unwrap();
        let fit = Fitter::new(k, 3, 0.0).fit(&traj).unwrap();
        worst = worst.max(
            fit.as_slice()
                .iter()
                .zip(truth.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    let mut const_err = 0.0f64;
    for _ in 0..50 {
        let k = r.random_range(4..=24);
        let frames = r.random_range(1..=64);
        let c: [f64; 3] = std::array::from_fn(|_| r.random_range(-5.0..5.0));
        let traj = TrajectoryGrid::from_fn(frames, 3, |_, _| c).unwrap();
        for mu in [0.0, 1e-6, 1e-4, 1e-3, 1e-2, 1.0] {
            if mu == 0.0 && frames < k {
                continue;
            }
            let fit = Fitter::new(k, 3, mu).fit(&traj).unwrap();
            for i in 0..k {
                for p in 0..3 {
                    let got = fit.get(i, p);
                    for a in 0..3 {
                        const_err = const_err.max((got[a] - c[a]).abs() / c[a].abs().max(1.0));
                    }
                }
            }
        }
    }
    judge(
        worst <= 1e-6 && const_err <= 1e-12,
        format!("max control error {worst:.1e} (mu=0, T>=k); constant trajectories relative error {const_err:.1e}"),
    )
}

fn synthetic_suite(seed: u64, count: usize) -> Vec<TrajectoryGrid> {
    let mut r = rng(seed);
    let params = BandLimited::default();
    (0..count)
        .map(|i| {
            let frames = r.random_range(5..=200);
            params.trajectory(frames, 16, seed * 1000 + i as u64).unwrap()
        })
        .collect()
}

fn bspline_error(traj: &TrajectoryGrid, k: usize) -> f64 {
    let fit = Fitter::new(k, 3, solver::DEFAULT_MU).fit(traj).unwrap();
    let back = solver::reproject(&fit, traj.frames()).unwrap();
    metrics::mean_l1_error(&back, traj).unwrap()
}

fn control_count_trend() -> Outcome {
    let suite = synthetic_suite(4, 100);
    let ks = [4, 8, 16, 32];
    let means: Vec<f64> = ks
        .iter()
        .map(|&k| suite.iter().map(|t| bspline_error(t, k)).sum::<f64>() / suite.len() as f64)
        .collect();
    let ratios: Vec<f64> = means.windows(2).map(|w| w[1] / w[0]).collect();
    // Positive means, so a ratio at most 0.7 is also a strict decrease.
    let ok = ratios.iter().all(|&q| q <= 0.7);
    judge(
        ok,
        format!(
            "mean L1 over k={ks:?}: [{}], ratios [{}]",
            means.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", "),
            ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn baseline_dominance() -> Outcome {
    let suite = synthetic_suite(5, 100);
    let mut wins = 0;
    let mut short = 0;
    for traj in &suite {
        let spline = bspline_error(traj, 16);
        let linear = metrics::mean_l1_error(&metrics::linear_baseline(traj, 16).unwrap(), traj).unwrap();
        if spline < linear {
            wins += 1;
        }
        if traj.frames() <= 16 {
            short += 1;
        }
    }
    judge(wins >= 90, format!("B-spline beats linear on {wins}/100 sequences ({short} have T<=16)"))
}

fn performance_budget() -> Outcome {
    let timing = bench_fit(200, 50_000, 16, 3, solver::DEFAULT_MU, 6, 0).unwrap();
    let total = timing.total_ms() / 1e3;
    let detail = format!(
        "T=200 n=50000 k=16: operator {:.2} ms + fit {:.1} ms = {total:.3} s (budget 1.0 s, CI tolerance 2.0 s)",
        timing.operator_ms, timing.fit_ms
    );
    Outcome {
        verdict: if total <= 2.0 { Verdict::Pass } else { Verdict::Report },
        detail,
    }
}

fn embedding_round_trip() -> Outcome {
    let basis = EmbeddingBasis::default();
    let mut r = rng(7);
    let (mut worst_rt, mut worst_anti, mut worst_lin) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_controls(&mut r, 17, 8, 3);
        let q = random_controls(&mut r, 17, 8, 3);
        let stack = basis.embed(&p).unwrap();
        let back = basis.reconstruct(&stack).unwrap();
        let scale = frobenius(p.as_slice());
        worst_rt = worst_rt.max(diff_norm(back.as_slice(), p.as_slice()) / scale);
        for (level, transport) in basis.transports().iter().enumerate() {
            let res = to_dense(stack.residual(level), transport.fine());
            let pinv: Dense = (0..transport.coarse())
                .map(|i| {
                    (0..transport.fine())
                        .map(|j| transport.pseudo_inverse()[(i, j)])
                        .collect()
                })
                .collect();
            let anti: Dense = {
                let a = transport.anti_projector();
                (0..a.nrows())
                    .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
                    .collect()
            };
            let killed = flatten(&matmul(&pinv, &res));
            let again = flatten(&matmul(&anti, &res));
            worst_anti = worst_anti
                .max(frobenius(&killed) / scale)
                .max(diff_norm(&again, &flatten(&res)) / scale);
        }
        let (a, b) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let combo_data: Vec<f64> = p
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(x, y)| a * x + b * y)
            .collect();
        let combo = ControlGrid::new(17, 8, 3, combo_data).unwrap();
        let lhs = basis.embed(&combo).unwrap();
        let eq = basis.embed(&q).unwrap();
        let rhs: Vec<f64> = stack
            .as_slice()
            .iter()
            .zip(eq.as_slice())
            .map(|(x, y)| a * x + b * y)
            .collect();
        worst_lin = worst_lin.max(diff_norm(lhs.as_slice(), &rhs) / frobenius(&rhs));
    }
    judge(
        worst_rt <= 1e-6 && worst_anti <= 1e-8 && worst_lin <= 1e-9,
        format!("round trip {worst_rt:.1e}, anti-projection {worst_anti:.1e}, linearity {worst_lin:.1e}"),
    )
}

fn rigidity_metric() -> Outcome {
    let cfg = MetricConfig::default();
    let mut r = rng(8);
    let mut rigid_exact = 0;
    let mut worst_rigid = 0.0f64;
    let mut min_scaled = f64::INFINITY;
    for _ in 0..20 {
        let base = random_cloud(&mut r, 200);
        let nbrs = knn(&base, cfg.knn_k).unwrap();
        let frames = r.random_range(2..=30);
        let motions: Vec<_> = (0..frames)
            .map(|_| {
                (
                    random_rotation(&mut r),
                    std::array::from_fn::<f64, 3, _>(|_| r.random_range(-1.0..1.0)),
                )
            })
            .collect();
        let rigid = TrajectoryGrid::from_fn(frames, base.len(), |t, i| {
            let (rot, shift) = &motions[t];
            let moved = rotate(rot, base[i]);
            std::array::from_fn(|c| moved[c] + shift[c] - base[i][c])
        })
        .unwrap();
        let loss = metrics::rigidity_loss(&rigid, &base, &nbrs, &cfg).unwrap();
        if loss == cfg.delta {
            rigid_exact += 1;
        }
        worst_rigid = worst_rigid.max((loss - cfg.delta).abs());
        let scales: Vec<f64> = (0..frames).map(|t| 1.0 + 0.05 * (t as f64 + 1.0)).collect();
        let scaled = TrajectoryGrid::from_fn(frames, base.len(), |t, i| base[i].map(|x| x * scales[t] - x)).unwrap();
        min_scaled = min_scaled.min(metrics::rigidity_loss(&scaled, &base, &nbrs, &cfg).unwrap());
    }
    judge(
        worst_rigid == 0.0 && min_scaled > cfg.delta,
        format!("rigid sequences equal to delta: {rigid_exact}/20 (max deviation {worst_rigid:.1e}); smallest scaling loss {min_scaled:.4e} > {:.0e}", cfg.delta),
    )
}

fn second_derivative_continuity() -> Outcome {
    let mut r = rng(9);
    let h = 1e-3;
    let mut worst = 0.0f64;
    let mut knots_checked = 0;
    for _ in 0..50 {
        let k = r.random_range(5..=24);
        let frames = r.random_range(k..=120);
        let traj = random_traj(&mut r, frames, 2);
        let fit = Fitter::new(k, 3, solver::DEFAULT_MU).fit(&traj).unwrap();
        let knots = KnotVector::clamped_uniform(k, 3).unwrap();
        // Reprojected curve through a freshly built basis row.
        let curve = |t: f64, col: usize| -> f64 {
            let row = BasisMatrix::new(k, 3, &[t]).unwrap();
            (0..k).map(|i| row.matrix()[(0, i)] * fit.row(i)[col]).sum()
        };
        let second = |t: f64, col: usize| (curve(t - h, col) - 2.0 * curve(t, col) + curve(t + h, col)) / (h * h);
        for &kappa in knots.interior() {
            knots_checked += 1;
            for col in 0..fit.width() {
                // Central differences stay on one polynomial piece, where they are exact
                // for cubics; extrapolate each side linearly to the knot.
                let left = 3.0 * second(kappa - 2.0 * h, col) - 2.0 * second(kappa - 3.0 * h, col);
                let right = 3.0 * second(kappa + 2.0 * h, col) - 2.0 * second(kappa + 3.0 * h, col);
                let scale = 1.0 + left.abs().max(right.abs());
                worst = worst.max((left - right).abs() / scale);
            }
        }
    }
    judge(
        worst <= 1e-6,
        format!("max scaled second-derivative jump {worst:.1e} over {knots_checked} interior knots"),
    )
}

fn laplacian_vs_ridge() -> Outcome {
    let mut r = rng(10);
    let mu = solver::DEFAULT_MU;
    let mut wins = 0;
    let mut smallest_gap = f64::INFINITY;
    for _ in 0..20 {
        let traj = random_traj(&mut r, 10, 4);
        let basis = BasisMatrix::uniform(16, 3, 10).unwrap();
        let lap = FittingOperator::new(basis.clone(), mu).unwrap().fit(&traj).unwrap();
        let ridge = solver::fit_ridge(&basis, mu, &traj).unwrap();
        let a = solver::laplacian_objective(&basis, mu, &traj, &lap).unwrap();
        let b = solver::laplacian_objective(&basis, mu, &traj, &ridge).unwrap();
        if a < b {
            wins += 1;
        }
        smallest_gap = smallest_gap.min((b - a) / b);
    }
    judge(
        wins == 20,
        format!("Laplacian fit lower on {wins}/20 instances (smallest relative gap {smallest_gap:.2e})"),
    )
}

fn io_and_spatial() -> Outcome {
    let mut r = rng(11);
    let mut failures = Vec::new();
    let path = std::path::Path::new("mem");

    let traj = random_traj(&mut r, 13, 7);
    let controls = Fitter::new(16, 3, 1e-3).fit(&traj).unwrap();
    let stack = EmbeddingBasis::default().embed(&controls.pad_to(17).unwrap()).unwrap();
    let splinemotion::dataset::ObjMesh { vertices: verts, faces } = splinemotion::synthetic::sheet(6, 5).unwrap();
    let surface = sample_surface(&MeshSequence::static_mesh(verts, faces).unwrap(), 500, 3).unwrap();
    for archive in [
        Archive::from_trajectory(&traj),
        Archive::from_controls(&controls),
        Archive::from_embedding(&stack, 1e-3),
        Archive::from_surface(&surface),
    ] {
        let bytes = encode(&archive).unwrap();
        let back = decode(&bytes, path, true).unwrap();
        let same_bits = back
            .payload
            .iter()
            .map(|v| v.to_bits())
            .eq(archive.payload.iter().map(|v| v.to_bits()));
        if !same_bits || back.metadata != archive.metadata || encode(&back).unwrap() != bytes {
            failures.push(format!("{:?} archive", archive.kind()));
        }
    }
    let manifest = DatasetManifest::new(vec![ManifestEntry {
        id: "a".into(),
        frames: 3,
        vertices: 4,
        paths: vec!["a.bsma".into()],
        format: MeshFormat::Packed,
        captions: vec!["walk".into()],
    }]);
    let json = serde_json::to_string(&manifest).unwrap();
    let back: DatasetManifest = serde_json::from_str(&json).unwrap();
    if back != manifest || serde_json::to_string(&back).unwrap() != json {
        failures.push("manifest".into());
    }

    let cloud = random_cloud(&mut r, 500);
    if knn(&cloud, 8).unwrap() != brute_knn(&cloud, 8) {
        failures.push("knn".into());
    }
    if farthest_point_sample(&cloud, 64, 0).unwrap() != brute_fps(&cloud, 64, 0) {
        failures.push("fps".into());
    }

    // Unit square cut into triangles of areas 0.1, 0.4 and 0.5.
    let square = vec![
        [0.0, 0.0, 0.0],
        [0.2, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
    ];
    let tris = vec![[0, 1, 4], [1, 2, 3], [1, 3, 4]];
    let samples = sample_surface(&MeshSequence::static_mesh(square, tris).unwrap(), 100_000, 12).unwrap();
    let bins = 10;
    let mut counts = vec![0usize; bins * bins];
    for p in &samples.points {
        let i = ((p[0] * bins as f64) as usize).min(bins - 1);
        let j = ((p[1] * bins as f64) as usize).min(bins - 1);
        counts[j * bins + i] += 1;
    }
    let expected = samples.len() as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat);
    if !(p_value > 1e-3) {
        failures.push(format!("density p={p_value:.2e}"));
    }

    judge(
        failures.is_empty(),
        if failures.is_empty() {
            format!("4 archive kinds + manifest bitwise; knn/fps match brute force on 500 points; density chi2={stat:.1} p={p_value:.3}")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Option<f64>);
    let criteria: [Criterion; 11] = [
        (1, "basis correctness", basis_correctness, Some(1.0)),
        (2, "solver matches oracles", solver_vs_oracles, Some(10.0)),
        (3, "exact recovery", exact_recovery, Some(5.0)),
        (4, "error falls with control count", control_count_trend, None),
        (5, "beats linear baseline", baseline_dominance, Some(30.0)),
        (6, "fit performance budget", performance_budget, None),
        (7, "embedding round trip", embedding_round_trip, None),
        (8, "rigidity metric", rigidity_metric, None),
        (9, "second-derivative continuity", second_derivative_continuity, None),
        (10, "Laplacian beats ridge", laplacian_vs_ridge, None),
        (11, "archives, spatial queries, sampling density", io_and_spatial, None),
    ];
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let secs = start.elapsed().as_secs_f64();
        if let Some(limit) = budget {
            if secs >= limit {
                outcome.verdict = Verdict::Fail;
                outcome
                    .detail
                    .push_str(&format!("; runtime {secs:.2} s exceeds {limit} s"));
            }
        }
        let tag = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Report => "REPORT",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
        };
        println!("acceptance {id:>2} [{tag}] {name}: {} ({secs:.2} s)", outcome.detail);
    }
    println!("acceptance summary: {failed} of {} criteria failed", criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
