use thiserror::Error;

/// Errors produced by the probability primitives, channel construction and
/// the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} is not normalized (sum = {sum})")]
    NotNormalized { what: String, sum: f64 },

    #[error("distortion target {target} is not attainable (residual {residual})")]
    DistortionInfeasible { target: f64, residual: f64 },

    #[error(
        "no multiplier pair meets both constraints (distortion residual {distortion_residual}, power residual {power_residual})"
    )]
    PairInfeasible {
        distortion_residual: f64,
        power_residual: f64,
    },

    #[error("cost budget {budget} is below the minimum input cost {min_cost}")]
    CostInfeasible { budget: f64, min_cost: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
