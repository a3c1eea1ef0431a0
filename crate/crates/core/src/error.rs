use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid coverage: captured norm {captured:.6} is below {required}")]
    Coverage { captured: f64, required: f64 },

    #[error("modes are sampled on different frequency grids")]
    GridMismatch,

    #[error("spectral phase violation: coefficient {index} has imaginary part {imag:e}")]
    PhaseModel { index: usize, imag: f64 },

    #[error("unphysical state: smallest symplectic eigenvalue {nu_min}")]
    Unphysical { nu_min: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("x-p cross block norm {norm:e} exceeds tolerance {tolerance:e}; use the Williamson decomposition")]
    CrossBlock { norm: f64, tolerance: f64 },

    #[error("dead pixel {0}: zero amplitude with nonzero projection coefficient")]
    DeadPixel(usize),

    #[error("configuration: {0}")]
    Config(String),

    #[error("schedule: {0}")]
    Schedule(String),

    #[error("numeric: {0}")]
    Numeric(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
