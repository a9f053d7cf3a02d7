//! Command errors, their exit codes and their JSON form.

use std::io;
use std::path::PathBuf;

use serde_json::json;
use vitscope_core::{ClusterError, MetricError, ReductionError, VitError};

use crate::corpus::{IngestError, SampleError};
use crate::plot::PlotError;
use crate::preprocess::DecodeError;
use crate::report::ReportError;
use crate::settings::ConfigError;
use crate::store::StoreError;
use crate::weights_io::WeightsError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{0}")]
    Alignment(String),
    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Model(#[from] VitError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => EXIT_USAGE,
            Error::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_DATA,
        }
    }

    /// Stable name of the error class.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Usage(_) => "UsageError",
            Error::Config(_) => "ConfigError",
            Error::Io { .. } => "IOError",
            Error::Format { .. } => "FormatError",
            Error::Alignment(_) => "AlignmentError",
            Error::Locked(_) => "LockError",
            Error::Ingest(_) => "IOError",
            Error::Sample(_) => "SampleError",
            Error::Store(StoreError::Alignment { .. }) => "AlignmentError",
            Error::Store(StoreError::Io { .. }) => "IOError",
            Error::Store(StoreError::CorruptHeader { .. }) => "CorruptHeaderError",
            Error::Store(StoreError::Truncated { .. }) => "TruncatedPayloadError",
            Error::Store(_) => "StoreError",
            Error::Weights(WeightsError::Model(VitError::MissingTensor { .. })) => "MissingTensorError",
            Error::Weights(WeightsError::Model(VitError::TensorShape { .. })) => "TensorShapeError",
            Error::Weights(WeightsError::Corrupt(_)) => "CorruptWeightsError",
            Error::Weights(_) => "WeightsError",
            Error::Decode(_) => "DecodeError",
            Error::Model(_) => "ModelError",
            Error::Reduction(ReductionError::TooFewPoints { .. }) | Error::Cluster(ClusterError::TooFewPoints { .. }) => {
                "TooFewPoints"
            }
            Error::Reduction(_) => "ReductionError",
            Error::Cluster(ClusterError::Alignment { .. }) | Error::Metric(MetricError::Alignment { .. }) => {
                "AlignmentError"
            }
            Error::Cluster(_) => "ClusterError",
            Error::Metric(_) => "MetricError",
            Error::Plot(PlotError::Dimension { .. }) => "DimensionError",
            Error::Plot(_) => "PlotError",
            Error::Report(_) => "ReportError",
            Error::Internal(_) => "InternalError",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": self.name(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
