use std::path::PathBuf;

/// Errors produced by the numerical routines and the run harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only n = 1 and n = 2 are modeled")]
    UnsupportedDimension(usize),

    #[error("points per axis must be a power of two >= 16, got {0}")]
    InvalidPoints(usize),

    #[error("half-width must be positive and finite, got {0}")]
    InvalidHalfWidth(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample {value} at lattice point {point:?}")]
    NonFinite { point: Vec<f64>, value: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonpositive weight sample {value} at lattice index {index}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("weight overflow: {0}")]
    WeightOverflow(String),

    #[error("cube outside domain: {0}")]
    CubeOutsideDomain(String),

    #[error("power weight |x|^{alpha} is not admissible at p = {p} in dimension {dim}")]
    InadmissibleWeight { alpha: f64, p: f64, dim: usize },

    #[error("projection onto the cancellation subspace is degenerate in dimension 1")]
    ProjectionInDimensionOne,

    #[error("symbol fails the cancellation condition: largest moment {0:e}")]
    CancellationViolated(f64),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invalid kernel sample: {0}")]
    InvalidSample(String),

    #[error("fit needs at least {needed} positive samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("missing column `{0}` in record")]
    MissingColumn(String),

    #[error("run directory {0} is locked by another writer")]
    Locked(PathBuf),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
