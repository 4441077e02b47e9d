use thiserror::Error;

/// Errors raised by the qudit library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("invalid label ({k}, {l}) for dimension {d}")]
    InvalidLabel { d: usize, k: usize, l: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid eigen index (g={g}, a={a})")]
    InvalidIndex { g: usize, a: usize },

    #[error("missing measurement data for label ({k}, {l})")]
    MissingLabel { k: usize, l: usize },

    #[error("frequencies for label ({k}, {l}) sum to {sum}, expected 1")]
    BadFrequencies { k: usize, l: usize, sum: f64 },

    #[error("unknown optical element path {path} (circuit has {n_paths} paths)")]
    PathOutOfRange { path: usize, n_paths: usize },

    #[error("unknown preset device '{0}'")]
    UnknownPreset(String),

    #[error("input state is not normalized (norm² = {0})")]
    Unnormalized(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
