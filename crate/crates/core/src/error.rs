use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("convolution would hold more than {cap} atoms; lower the horizon or raise the cap")]
    AtomCapExceeded { cap: usize },

    #[error("walk generated more than {cap} points before passing the horizon")]
    PointCapExceeded { cap: usize },

    #[error("branching population exceeded {cap} individuals in generation {generation}")]
    PopulationCapExceeded { cap: usize, generation: u32 },

    #[error("degenerate walk: {0}")]
    DegenerateWalk(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },

    #[error("mean function unavailable: {0}")]
    MeanUnavailable(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("e^(beta*T) = e^{exponent} is not representable as f64")]
    OverflowGuard { exponent: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the resource-cap family of errors.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::AtomCapExceeded { .. }
                | Error::PointCapExceeded { .. }
                | Error::PopulationCapExceeded { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
