use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} dimension {dim} exceeds the configured cap of {cap}")]
    ExceedsCap {
        what: &'static str,
        dim: usize,
        cap: usize,
    },

    #[error("Hafnian requires an even dimension, got {0}")]
    OddDimension(usize),

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("photon number mismatch: input carries {input}, output carries {output}")]
    PhotonNumberMismatch { input: usize, output: usize },

    #[error("unsupported pattern: {0}")]
    UnsupportedPattern(String),

    #[error("pattern domain holds {size} patterns, above the limit of {limit}")]
    DomainTooLarge { size: u128, limit: usize },

    #[error("distribution has zero total weight and cannot be normalised")]
    ZeroDistribution,

    #[error("sample {index} has zero probability under every compared model")]
    ZeroLikelihood { index: usize },

    #[error("matrix is singular")]
    Singular,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
