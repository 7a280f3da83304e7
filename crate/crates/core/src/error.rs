use thiserror::Error;

/// Errors raised across the model.
///
/// The variants split into two families that the CLI maps onto different
/// exit codes: contract/domain problems with the inputs (`is_config`) and
/// numerical failures during evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("singular argument: {0}")]
    SingularArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("frequency grid too coarse: |chi| = {boundary_value:e} at the boundary; try an extent of at least {suggested_extent}")]
    GridTooCoarse {
        boundary_value: f64,
        suggested_extent: f64,
    },

    #[error("derivative stencil at S = {spot} does not fit inside the grid")]
    Boundary { spot: f64 },

    #[error("no inverse branch of P at {argument}; candidates: {candidates:?}")]
    BranchSelection {
        argument: String,
        candidates: Vec<String>,
    },

    #[error("small-k limit did not converge: probe values {first} and {second}")]
    LimitEvaluation { first: f64, second: f64 },

    #[error("time stepping unstable (max |C| = {max_value:e}); try a time step of at most {suggested_dt:e}")]
    Stability { max_value: f64, suggested_dt: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("distributional limit: {0}")]
    Distributional(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Contract(_) | Error::Config(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
