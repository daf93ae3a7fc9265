use thiserror::Error;

/// Errors raised across mesh construction, assembly, solving and reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate mesh: element {element} has measure {measure:e}")]
    DegenerateMesh { element: usize, measure: f64 },

    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("bilinear form is not coercive: pivot {pivot:e} at row {row}")]
    CoercivityViolation { row: usize, pivot: f64 },

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("geometry failure: {0}")]
    Geometry(String),

    #[error("config line {line}, key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
