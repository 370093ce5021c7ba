use thiserror::Error;

/// Errors produced while building sectors, propagating states or running sweeps.
#[derive(Debug, Error)]
pub enum Error {
    #[error("c·N = {fraction}·{spins} is not an integer")]
    NonIntegerFraction { spins: usize, fraction: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectrum is degenerate: minimum level spacing {spacing:e} is below {threshold:e}")]
    DegenerateSpectrum { spacing: f64, threshold: f64 },

    #[error("fidelity did not stabilise within {max_steps} steps (last change {last_change:e})")]
    NonConverged { max_steps: usize, last_change: f64 },

    #[error("full-space propagation needs N <= {max}, got N = {spins}")]
    DimensionTooLarge { spins: usize, max: usize },

    #[error("fit needs at least {needed} usable points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
