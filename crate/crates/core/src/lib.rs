pub mod archive;
pub mod config;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod sampling;
pub mod solver;
pub mod spatial;
pub mod spline;
pub mod synthetic;
pub mod timing;

pub use archive::{Archive, ArchiveKind, ArchiveMetadata};
pub use config::RunConfig;
pub use dataset::{DatasetManifest, ManifestEntry, MeshFormat};
pub use embedding::{EmbeddingBasis, EmbeddingStack, LevelSchedule, TransportOperator};
pub use error::{Error, Result};
pub use grid::{ControlGrid, TrajectoryGrid};
pub use metrics::MetricConfig;
pub use sampling::{MeshSequence, SampledSurface};
pub use solver::{Fitter, FittingOperator, Regularizer, SecondDifferenceMatrix};
pub use spline::{BasisMatrix, KnotVector};
