use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("sample spacings differ: {0} vs {1}")]
    IncompatibleSpacing(f64, f64),

    #[error("grid frequency {requested} exceeds the Nyquist limit {nyquist}")]
    ExceedsNyquist { requested: f64, nyquist: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid too coarse: spacing {spacing} exceeds {limit} ({what})")]
    GridTooCoarse {
        what: &'static str,
        spacing: f64,
        limit: f64,
    },

    #[error("no closed form available for window {0}")]
    NoClosedForm(&'static str),

    #[error("no control function available for window {0}")]
    NoControlFunction(&'static str),

    #[error("pair is not admissible: {0}")]
    NotAdmissible(String),

    #[error("weight has zero total mass")]
    ZeroMass,

    #[error("weight field is degenerate: {0}")]
    Degenerate(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("nonpositive value {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("{0} lies outside the grid")]
    OutsideGrid(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
