use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trajectory {trajectory} diverged at step {step}: state ({x}, {y})")]
    Divergent {
        trajectory: u64,
        step: usize,
        x: f64,
        y: f64,
    },

    #[error("diffusion matrix is singular at ({x}, {y})")]
    SingularDiffusion { x: f64, y: f64 },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("stationary density is not normalizable on the grid (boundary mass {boundary_mass:.3e}); widen the grid")]
    NonNormalizable { boundary_mass: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Divergent { .. } => "divergent",
            Error::SingularDiffusion { .. } => "singular_diffusion",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::NonNormalizable { .. } => "non_normalizable",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
