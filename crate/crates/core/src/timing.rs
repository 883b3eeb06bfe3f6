//! Wall-clock and memory measurements for the fitting pipeline.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Result;
use crate::grid::TrajectoryGrid;
use crate::solver::Fitter;
use crate::synthetic::BandLimited;

#[derive(Debug, Clone, Serialize)]
pub struct FitTiming {
    pub frames: usize,
    pub points: usize,
    pub k: usize,
    pub degree: usize,
    /// Operator build on a cold cache.
    pub operator_ms: f64,
    pub fit_ms: f64,
    /// Operator lookup on the warm cache.
    pub cached_operator_ms: f64,
    /// Lookup plus fit for each repeated run on the warm cache.
    pub warm_fit_ms: Vec<f64>,
    pub peak_rss_kib: Option<u64>,
}

impl FitTiming {
    pub fn total_ms(&self) -> f64 {
        self.operator_ms + self.fit_ms
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Times operator construction and the fit of `traj` separately, then
/// `repeats` further fits that reuse the cached operator.
pub fn time_fit(traj: &TrajectoryGrid, k: usize, degree: usize, mu: f64, repeats: usize) -> Result<FitTiming> {
    let fitter = Fitter::new(k, degree, mu);
    let start = Instant::now();
    let op = fitter.operator(traj.frames())?;
    let operator = start.elapsed();
    let start = Instant::now();
    let controls = op.fit(traj)?;
    let fit = start.elapsed();
    std::hint::black_box(&controls);
    let start = Instant::now();
    std::hint::black_box(fitter.operator(traj.frames())?);
    let cached = start.elapsed();
    let mut warm_fit_ms = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        std::hint::black_box(fitter.operator(traj.frames())?.fit(traj)?);
        warm_fit_ms.push(ms(start.elapsed()));
    }
    Ok(FitTiming {
        frames: traj.frames(),
        points: traj.points(),
        k,
        degree,
        operator_ms: ms(operator),
        fit_ms: ms(fit),
        cached_operator_ms: ms(cached),
        warm_fit_ms,
        peak_rss_kib: peak_rss_kib(),
    })
}

/// Generates a synthetic `frames × points` trajectory and times its fit.
pub fn bench_fit(
    frames: usize,
    points: usize,
    k: usize,
    degree: usize,
    mu: f64,
    seed: u64,
    repeats: usize,
) -> Result<FitTiming> {
    let traj = BandLimited::default().trajectory(frames, points, seed)?;
    time_fit(&traj, k, degree, mu, repeats)
}

/// Peak resident set size of this process, where the platform reports it.
pub fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}
