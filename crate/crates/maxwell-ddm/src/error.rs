//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("point {point:?} lies outside the computational domain")]
    OutOfDomain { point: [f64; 3] },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("matrix is not positive definite (leading minor {minor})")]
    NotPositiveDefinite { minor: usize },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver failed to converge")]
    EigenNoConvergence,

    #[error("subdomain {subdomain}: {message}")]
    Subdomain { subdomain: usize, message: String },

    #[error("coarse space error: {0}")]
    Coarse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
