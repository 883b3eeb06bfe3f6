//! Run settings: command-line flags over an optional TOML file over defaults.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use splinemotion::metrics::RigidityMode;
use splinemotion::RunConfig;

use crate::failure::{CmdResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RigidityArg {
    DeformedLength,
    DisplacementDifference,
}

impl From<RigidityArg> for RigidityMode {
    fn from(r: RigidityArg) -> Self {
        match r {
            RigidityArg::DeformedLength => RigidityMode::DeformedLength,
            RigidityArg::DisplacementDifference => RigidityMode::DisplacementDifference,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with run settings; explicit flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Control points per trajectory.
    #[arg(long)]
    pub k: Option<usize>,
    /// Spline degree.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Weight of the second-difference regularizer.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Reference sample count of the embedding transports.
    #[arg(long)]
    pub t_prime: Option<usize>,
    /// Embedding level sizes, finest first (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<usize>>,
    /// Charbonnier stabilizer.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Correspondence loss weight.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Rigidity loss weight.
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Neighbours per point in the rigidity metric.
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long, value_enum)]
    pub rigidity: Option<RigidityArg>,
    /// Surface samples per mesh.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "SPLINEMOTION_WORKERS")]
    pub workers: Option<usize>,
}

fn load_file(path: &Path) -> CmdResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))
}

fn set<T>(slot: &mut T, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *slot = v.clone();
    }
}

impl RunArgs {
    /// The effective configuration. Also sizes the global worker pool.
    pub fn resolve(&self) -> CmdResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => load_file(path)?,
            None => RunConfig::default(),
        };
        set(&mut c.k, &self.k);
        set(&mut c.degree, &self.degree);
        set(&mut c.mu, &self.mu);
        set(&mut c.t_prime, &self.t_prime);
        set(&mut c.schedule, &self.schedule);
        set(&mut c.delta, &self.delta);
        set(&mut c.lambda1, &self.lambda1);
        set(&mut c.lambda2, &self.lambda2);
        set(&mut c.knn_k, &self.knn);
        if let Some(r) = self.rigidity {
            c.rigidity = r.into();
        }
        set(&mut c.samples, &self.samples);
        set(&mut c.seed, &self.seed);
        set(&mut c.workers, &self.workers);
        c.validate().map_err(|e| Failure::Usage(e.into()))?;
        if c.workers > 0 {
            // Only the first call can size the global pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(c.workers).build_global();
        }
        Ok(c)
    }
}

/// Writes one `key=value` line to standard error.
pub fn log_line(command: &str, fields: &[(&str, &dyn Display)]) {
    let mut line = String::from(command);
    for (key, value) in fields {
        let v = value.to_string();
        if v.is_empty() || v.contains(char::is_whitespace) || v.contains('"') {
            line.push_str(&format!(" {key}={v:?}"));
        } else {
            line.push_str(&format!(" {key}={v}"));
        }
    }
    eprintln!("{line}");
}

/// Rejects ids that would escape the output directory.
pub fn file_stem(id: &str) -> CmdResult<&str> {
    if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
        return Err(Failure::data(format!(
            "sequence id {id:?} is not usable as a file name"
        )));
    }
    Ok(id)
}

pub fn ensure_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))
}
