use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgGroup, Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use splinemotion::metrics::{self, MetricsRecord};
use splinemotion::sampling::MeshSequence;
use splinemotion::spatial::knn;
use splinemotion::synthetic::{self, BandLimited};
use splinemotion::{solver, BasisMatrix, Fitter, RunConfig, TrajectoryGrid};

use crate::failure::{CmdResult, Failure};
use crate::fit::{load_manifest, sorted_entries};
use crate::settings::{log_line, RunArgs};

/// Vertex count of generated comparison meshes.
const SYNTHETIC_VERTICES: usize = 64;
const SYNTHETIC_FRAMES: std::ops::RangeInclusive<usize> = 5..=200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Laplacian-regularized B-spline fit with k control points.
    Bspline,
    /// k evenly spaced frames, linearly interpolated.
    Linear,
    /// Ridge-regularized B-spline fit with k control points.
    Ridge,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Bspline => "bspline",
            Method::Linear => "linear",
            Method::Ridge => "ridge",
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["manifest", "synthetic"])))]
pub struct CompareArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Compare on this many generated band-limited sequences instead.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Methods to evaluate (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "bspline")]
    pub methods: Vec<Method>,
    /// Control-point counts (sample counts for `linear`); defaults to --k.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// JSONL report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Fail on the first sequence that cannot be evaluated.
    #[arg(long)]
    pub strict: bool,
    /// Keep raw coordinates instead of normalizing into the manifest box.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

struct Evaluator<'a> {
    config: &'a RunConfig,
    methods: Vec<Method>,
    ks: Vec<usize>,
    fitters: BTreeMap<usize, Fitter>,
}

impl Evaluator<'_> {
    fn reconstruct(&self, method: Method, k: usize, deltas: &TrajectoryGrid) -> CmdResult<TrajectoryGrid> {
        let frames = deltas.frames();
        Ok(match method {
            Method::Bspline => solver::reproject(&self.fitters[&k].fit(deltas)?, frames)?,
            Method::Ridge => {
                let basis = BasisMatrix::uniform(k, self.config.degree, frames)?;
                solver::reproject_with(&basis, &solver::fit_ridge(&basis, self.config.mu, deltas)?)?
            }
            Method::Linear if frames == 1 => deltas.clone(),
            Method::Linear => metrics::linear_baseline(deltas, k)?,
        })
    }

    fn evaluate(&self, id: &str, mesh: &MeshSequence) -> CmdResult<Vec<MetricsRecord>> {
        let n = mesh.base_vertices.len();
        let neighbors = if n > self.config.knn_k && mesh.frames() > 1 {
            Some(knn(&mesh.base_vertices, self.config.knn_k)?)
        } else {
            None
        };
        let mc = self.config.metrics();
        let mut rows = Vec::new();
        for &method in &self.methods {
            for &k in &self.ks {
                let start = Instant::now();
                let recon = self.reconstruct(method, k, &mesh.deltas)?;
                let mean_l1 = metrics::mean_l1_error(&recon, &mesh.deltas)?;
                let rigidity = match &neighbors {
                    Some(nb) => metrics::rigidity_loss(&recon, &mesh.base_vertices, nb, &mc)?,
                    None => f64::NAN,
                };
                let corr = metrics::trajectory_charbonnier(&recon, &mesh.deltas, mc.delta)?;
                rows.push(MetricsRecord {
                    id: id.to_string(),
                    frames: mesh.frames(),
                    k,
                    method: method.name().to_string(),
                    mean_l1,
                    rigidity,
                    corr,
                    wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                });
            }
        }
        Ok(rows)
    }
}

#[derive(Serialize)]
struct MeanRow {
    method: &'static str,
    k: usize,
    rows: usize,
    mean_l1: f64,
    rigidity: f64,
    corr: f64,
}

#[derive(Serialize)]
struct WinRate {
    k: usize,
    against: &'static str,
    bspline_wins: usize,
    compared: usize,
    rate: f64,
}

#[derive(Serialize)]
struct Summary {
    sequences: usize,
    failed: usize,
    means: Vec<MeanRow>,
    win_rates: Vec<WinRate>,
    config: serde_json::Value,
}

fn summarize(records: &[MetricsRecord], ev: &Evaluator, sequences: usize, failed: usize) -> Summary {
    let mut means = Vec::new();
    for &method in &ev.methods {
        for &k in &ev.ks {
            let rows: Vec<_> = records
                .iter()
                .filter(|r| r.method == method.name() && r.k == k)
                .collect();
            let mean = |f: fn(&MetricsRecord) -> f64| -> f64 {
                let vals: metrics::RunningMean = rows.iter().map(|r| f(r)).filter(|v| v.is_finite()).collect();
                if vals.count() == 0 {
                    f64::NAN
                } else {
                    vals.mean()
                }
            };
            means.push(MeanRow {
                method: method.name(),
                k,
                rows: rows.len(),
                mean_l1: mean(|r| r.mean_l1),
                rigidity: mean(|r| r.rigidity),
                corr: mean(|r| r.corr),
            });
        }
    }
    let mut win_rates = Vec::new();
    if ev.methods.contains(&Method::Bspline) {
        for &other in ev.methods.iter().filter(|&&m| m != Method::Bspline) {
            for &k in &ev.ks {
                let lookup = |m: Method| -> BTreeMap<&str, f64> {
                    records
                        .iter()
                        .filter(|r| r.method == m.name() && r.k == k)
                        .map(|r| (r.id.as_str(), r.mean_l1))
                        .collect()
                };
                let ours = lookup(Method::Bspline);
                let theirs = lookup(other);
                let pairs: Vec<_> = ours
                    .iter()
                    .filter_map(|(id, a)| theirs.get(id).map(|b| (*a, *b)))
                    .collect();
                let wins = pairs.iter().filter(|(a, b)| a < b).count();
                win_rates.push(WinRate {
                    k,
                    against: other.name(),
                    bspline_wins: wins,
                    compared: pairs.len(),
                    rate: if pairs.is_empty() {
                        f64::NAN
                    } else {
                        wins as f64 / pairs.len() as f64
                    },
                });
            }
        }
    }
    Summary {
        sequences,
        failed,
        means,
        win_rates,
        config: ev.config.to_json(),
    }
}

/// Per-sequence frame count and report rows, keyed by sequence id.
type Outcome = (String, CmdResult<(usize, Vec<MetricsRecord>)>);

enum Source {
    Manifest(splinemotion::DatasetManifest),
    Synthetic(Vec<(String, usize, u64)>),
}

pub fn run(args: CompareArgs) -> CmdResult {
    let config = args.run.resolve()?;
    let mut methods = args.methods.clone();
    methods.sort();
    methods.dedup();
    let mut ks = args.ks.clone().unwrap_or_else(|| vec![config.k]);
    ks.sort_unstable();
    ks.dedup();
    let min_k = if methods == [Method::Linear] {
        2
    } else {
        config.degree + 1
    };
    if let Some(k) = ks.iter().find(|&&k| k < min_k) {
        return Err(Failure::usage(format!("k={k} is too small (need at least {min_k})")));
    }
    let evaluator = Evaluator {
        config: &config,
        fitters: ks
            .iter()
            .map(|&k| (k, Fitter::new(k, config.degree, config.mu)))
            .collect(),
        methods,
        ks,
    };

    let source = match (&args.manifest, args.synthetic) {
        (Some(path), _) => Source::Manifest(load_manifest(path)?),
        (None, Some(0)) => return Err(Failure::usage("no sequences: --synthetic must be positive")),
        (None, Some(count)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Source::Synthetic(
                (0..count)
                    .map(|i| {
                        (
                            format!("synthetic_{i:04}"),
                            rng.random_range(SYNTHETIC_FRAMES),
                            rng.random(),
                        )
                    })
                    .collect(),
            )
        }
        (None, None) => return Err(Failure::usage("pass --manifest or --synthetic")),
    };

    let results: Vec<Outcome> = match &source {
        Source::Manifest(m) => sorted_entries(m)
            .par_iter()
            .map(|e| {
                let r = m
                    .load_entry(e, !args.raw)
                    .map_err(Failure::from)
                    .and_then(|mesh| Ok((mesh.frames(), evaluator.evaluate(&e.id, &mesh)?)));
                (e.id.clone(), r)
            })
            .collect(),
        Source::Synthetic(specs) => specs
            .par_iter()
            .map(|(id, frames, seed)| {
                let r = synthetic::mesh_sequence(*frames, SYNTHETIC_VERTICES, *seed, BandLimited::default())
                    .map_err(Failure::from)
                    .and_then(|mesh| Ok((mesh.frames(), evaluator.evaluate(id, &mesh)?)));
                (id.clone(), r)
            })
            .collect(),
    };

    let mut records = Vec::new();
    let mut failed = 0;
    let mut first_failure = None;
    for (id, result) in results {
        match result {
            Ok((frames, rows)) => {
                log_line(
                    "compare",
                    &[("id", &id), ("status", &"ok"), ("T", &frames), ("rows", &rows.len())],
                );
                records.extend(rows);
            }
            Err(e) => {
                failed += 1;
                log_line(
                    "compare",
                    &[("id", &id), ("status", &"error"), ("exit", &e.code()), ("error", &e)],
                );
                first_failure.get_or_insert(e.context(format!("sequence {id}")));
            }
        }
    }
    let sequences = records
        .iter()
        .map(|r| r.id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if let Some(e) = first_failure {
        if args.strict || sequences == 0 {
            return Err(e);
        }
    }

    let summary = summarize(&records, &evaluator, sequences, failed);
    let mut text = String::new();
    for r in &records {
        let _ = writeln!(text, "{}", serde_json::to_string(r).expect("report rows serialize"));
    }
    let _ = writeln!(text, "{}", serde_json::json!({ "summary": summary }));
    std::fs::write(&args.out, text).map_err(|e| Failure::data(format!("cannot write {}: {e}", args.out.display())))?;
    for w in &summary.win_rates {
        log_line(
            "compare",
            &[
                ("win_rate", &format!("{:.4}", w.rate)),
                ("k", &w.k),
                ("against", &w.against),
                ("wins", &w.bspline_wins),
                ("compared", &w.compared),
            ],
        );
    }
    Ok(())
}
