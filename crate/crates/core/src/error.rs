use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cylinder contains no grid nodes")]
    EmptyCylinder,

    #[error("region leaves the grid: {0}")]
    OutOfGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "solver did not converge at layer {layer} after {sweeps} sweeps (residual {residual:e})"
    )]
    NotConverged {
        layer: usize,
        sweeps: usize,
        residual: f64,
    },

    #[error("boundary data is negative on the thin space at node {node} (value {value:e})")]
    IncompatibleBoundary { node: usize, value: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("inadmissible competitor: {0}")]
    Inadmissible(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
