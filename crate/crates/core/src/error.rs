use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("matrix is not positive semidefinite (most negative eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix has no nonsingular part (numerical rank 0)")]
    RankZero,

    #[error("rank-deficient input: numerical rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("numerically tied singular values (gap {gap:e})")]
    TiedValues { gap: f64 },

    #[error("multivariate gamma pole: Gamma_{p}[{a}] requires a > (p-1)/2")]
    GammaPole { p: usize, a: f64 },

    #[error("value outside distribution support: {0}")]
    Support(String),

    #[error("ordering violation: values must be strictly descending")]
    NotDescending,

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("divergent configuration: {0}")]
    Divergent(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
