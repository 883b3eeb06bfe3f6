//! Effective run configuration shared by the batch commands.

use serde::{Deserialize, Serialize};

use crate::embedding::{LevelSchedule, DEFAULT_REFERENCE_FRAMES, DEFAULT_SCHEDULE};
use crate::error::{Error, Result};
use crate::metrics::{
    MetricConfig, RigidityMode, DEFAULT_DELTA, DEFAULT_KNN, DEFAULT_LAMBDA_CORR, DEFAULT_LAMBDA_RIGID,
};
use crate::sampling::DEFAULT_SAMPLE_COUNT;
use crate::solver::{DEFAULT_CONTROLS, DEFAULT_MU};
use crate::spline::DEFAULT_DEGREE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k: usize,
    pub degree: usize,
    pub mu: f64,
    pub t_prime: usize,
    pub schedule: Vec<usize>,
    pub delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub knn_k: usize,
    pub rigidity: RigidityMode,
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_CONTROLS,
            degree: DEFAULT_DEGREE,
            mu: DEFAULT_MU,
            t_prime: DEFAULT_REFERENCE_FRAMES,
            schedule: DEFAULT_SCHEDULE.to_vec(),
            delta: DEFAULT_DELTA,
            lambda1: DEFAULT_LAMBDA_CORR,
            lambda2: DEFAULT_LAMBDA_RIGID,
            knn_k: DEFAULT_KNN,
            rigidity: RigidityMode::default(),
            samples: DEFAULT_SAMPLE_COUNT,
            seed: 0,
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 || self.k < self.degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "k={} control points cannot carry a degree-{} spline",
                self.k, self.degree
            )));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mu must be finite and >= 0, got {}",
                self.mu
            )));
        }
        self.metrics().validate()
    }

    pub fn metrics(&self) -> MetricConfig {
        MetricConfig {
            delta: self.delta,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            knn_k: self.knn_k,
            rigidity: self.rigidity,
        }
    }

    pub fn level_schedule(&self) -> Result<LevelSchedule> {
        LevelSchedule::new(self.schedule.clone(), self.t_prime, self.degree)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let c = RunConfig::default();
        assert_eq!(c.k, 16);
        assert_eq!(c.schedule, vec![17, 15, 13, 11, 9, 7, 5, 4]);
        let back: RunConfig = serde_json::from_value(c.to_json()).unwrap();
        assert_eq!(back, c);
        let partial: RunConfig = serde_json::from_str(r#"{"k": 8}"#).unwrap();
        assert_eq!(partial.k, 8);
        assert_eq!(partial.mu, DEFAULT_MU);
        c.validate().unwrap();
        c.level_schedule().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let c = RunConfig {
            k: 3,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            mu: -1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"kk": 8}"#).is_err());
    }
}
