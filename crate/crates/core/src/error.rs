use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QlabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("metric is not positive definite at node {node} (min eigenvalue below {floor:e})")]
    NotPositiveDefinite { node: usize, floor: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("operation requires dimension {required}, grid has dimension {actual}")]
    DimensionRequired { required: usize, actual: usize },

    #[error("dimension {0} unsupported here (need n >= 3)")]
    DimensionTooSmall(usize),

    #[error("component count mismatch: expected {expected}, found {found}")]
    ComponentMismatch { expected: usize, found: usize },

    #[error("target is outside the solver neighbourhood: relative distance {distance:e} > {radius:e}")]
    OutsideNeighbourhood { distance: f64, radius: f64 },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed field file: {0}")]
    MalformedField(String),
}

impl From<std::io::Error> for QlabError {
    fn from(e: std::io::Error) -> Self {
        QlabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QlabError>;
