use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("subsystem (ell={ell}, m={m}) out of range for {sites} sites")]
    SubsystemOutOfRange { ell: usize, m: usize, sites: usize },

    #[error("system of {sites} sites exceeds the dense limit of {limit}")]
    TooLarge { sites: usize, limit: usize },

    #[error("strong subadditivity violated at (ell={ell}, m={m}): local information {value:e}")]
    SsaViolation { ell: usize, m: usize, value: f64 },

    #[error("invalid density matrix: eigenvalue {0:e}")]
    InvalidDensityMatrix(f64),

    #[error("invalid covariance matrix: symplectic eigenvalue {0}")]
    InvalidCovariance(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("operation requires a pure state")]
    MixedState,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors that come from the numerics rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SsaViolation { .. }
                | Error::InvalidDensityMatrix(_)
                | Error::InvalidCovariance(_)
                | Error::Numerical(_)
        )
    }
}
