//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. Variants are grouped into
//! coarse [`ErrorCategory`] values so callers (notably the CLI) can map
//! failures to stable exit codes.

use thiserror::Error;

/// Coarse failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad configuration or unknown keys (exit code 2).
    Config,
    /// Malformed or insufficient input data (exit code 3).
    Data,
    /// Numerical failure such as divergence or indefiniteness (exit code 4).
    Numeric,
    /// Artifact lineage or version mismatch (exit code 5).
    Lineage,
    /// I/O and serialization failures (exit code 3).
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data | ErrorCategory::Io => 3,
            ErrorCategory::Numeric => 4,
            ErrorCategory::Lineage => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // --- data ingestion ---
    #[error("{file}: missing required column '{column}'")]
    MissingColumn { file: String, column: String },
    #[error("{file}: timestamps not strictly increasing at row {row} ({timestamp})")]
    NonMonotonicTimestamps {
        file: String,
        row: usize,
        timestamp: String,
    },
    #[error("{file}: non-numeric cell at row {row}, column '{column}': {cell:?}")]
    NonNumericCell {
        file: String,
        row: usize,
        column: String,
        cell: String,
    },
    #[error("{file}: hourly grid gap before row {row} ({timestamp}); expected 1 h step")]
    GapInHourlyGrid {
        file: String,
        row: usize,
        timestamp: String,
    },
    #[error("coarse grid does not cover target grid: {detail}")]
    GridNotCovering { detail: String },
    #[error("series '{series}' has no positive observation in the training slice")]
    AllZeroSeries { series: String },
    #[error("no feasible window origin: {detail}")]
    RangeTooShort { detail: String },

    // --- model fitting / marginals ---
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("bad moving-average kernel {kernel} for window length {window} (need odd, 1..=W)")]
    BadKernel { kernel: usize, window: usize },
    #[error("quantile values not sorted ascending")]
    UnsortedQuantiles,
    #[error("degenerate samples: {detail}")]
    DegenerateSamples { detail: String },
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("value {value} outside CDF support [{lo}, {hi}]")]
    OutOfSupport { value: f64, lo: f64, hi: f64 },
    #[error("domain error: {detail}")]
    DomainError { detail: String },

    // --- copula ---
    #[error("missing marginal CDF for location {location}, step {step}")]
    MissingMarginal { location: usize, step: usize },
    #[error("PIT row for location {location}, step {step} has zero variance")]
    ZeroVarianceRow { location: usize, step: usize },
    #[error("correlation matrix not positive definite (jitter reached {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },
    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    // --- metrics ---
    #[error("deterministic forecast required for metric '{metric}' but absent")]
    MissingForecast { metric: String },
    #[error("scenario ensemble required for metric '{metric}' but absent")]
    NoScenarios { metric: String },

    // --- pipeline ---
    #[error("config error at '{key}': {reason}")]
    ConfigError { key: String, reason: String },
    #[error("insufficient data: {detail}")]
    InsufficientData { detail: String },
    #[error("artifact version mismatch: {detail}")]
    VersionMismatch { detail: String },
    #[error("stale artifact: {detail}")]
    StaleArtifact { detail: String },

    // --- environment ---
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            ConfigError { .. } => ErrorCategory::Config,
            MissingColumn { .. }
            | NonMonotonicTimestamps { .. }
            | NonNumericCell { .. }
            | GapInHourlyGrid { .. }
            | GridNotCovering { .. }
            | AllZeroSeries { .. }
            | RangeTooShort { .. }
            | ShapeMismatch { .. }
            | BadKernel { .. }
            | UnsortedQuantiles
            | DegenerateSamples { .. }
            | OutOfSupport { .. }
            | DomainError { .. }
            | MissingMarginal { .. }
            | ZeroVarianceRow { .. }
            | DimensionMismatch { .. }
            | MissingForecast { .. }
            | NoScenarios { .. }
            | InsufficientData { .. } => ErrorCategory::Data,
            NonFiniteLoss { .. } | NotPositiveDefinite { .. } => ErrorCategory::Numeric,
            VersionMismatch { .. } | StaleArtifact { .. } => ErrorCategory::Lineage,
            Io { .. } | Serde(_) => ErrorCategory::Io,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
