use thiserror::Error;

/// Failures raised by the sampler, the Kalman layer and the experiment drivers.
#[derive(Debug, Error)]
pub enum SmcError {
    #[error("all particle weights are zero or non-finite at t={t}")]
    DegeneratePopulation { t: usize },

    #[error("trial density is zero at a sampled point (t={t})")]
    ImproperTrial { t: usize },

    #[error("lookahead needs observations up to t={needed} but only {available} are available")]
    HorizonExceeded { needed: usize, available: usize },

    #[error("enumeration of {size} future paths exceeds the limit of {limit}")]
    EnumerationLimit { size: f64, limit: f64 },

    #[error("operation requires a finite state support at t={t}")]
    NotFinite { t: usize },

    #[error("operation requires a Markovian model")]
    NotMarkovian,

    #[error("smoothing requires a model that exposes a smoothing key")]
    SmoothingUnavailable,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("lag {lag} exceeds the retained history of depth {depth}")]
    LagExceedsHistory { lag: usize, depth: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference cache: {0}")]
    Reference(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SmcError {
    /// Process exit code used by the `smc` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            SmcError::Config(_) | SmcError::Json(_) | SmcError::Reference(_) => 2,
            SmcError::InvalidPartition(_) | SmcError::HorizonExceeded { .. } => 2,
            SmcError::Io(_) | SmcError::Csv(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, SmcError>;
