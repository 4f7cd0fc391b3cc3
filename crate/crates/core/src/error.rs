use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("projection {y} of latent point {point} under context {context} lies outside [-{y_max}, {y_max}]")]
    ProjectionOutOfRange {
        point: usize,
        context: usize,
        y: f64,
        y_max: f64,
    },

    /// A binned marginal fell below the negative-clip tolerance; the
    /// discretization is too coarse for the latent model.
    #[error("binned marginal {value:.3e} at context {context}, outcome {outcome} is below -{tolerance:.1e}")]
    NegativeMarginal {
        context: usize,
        outcome: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("invalid statistics: {0}")]
    InvalidStatistics(String),

    #[error("solver did not converge after {iterations} iterations (duality gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("no trials in context {0}")]
    EmptyContext(usize),

    #[error("no held-out trials for region {region} under context {context}")]
    EmptyCell { region: usize, context: usize },

    #[error("invalid spin input: {0}")]
    InvalidSpin(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
