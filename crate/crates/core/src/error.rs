use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dense tensor of {entries} entries exceeds the oracle cap of {cap}")]
    DenseCapExceeded { entries: usize, cap: usize },

    #[error("rank {rank} out of range (max {max})")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate total least squares: {0}")]
    DegenerateTls(String),

    #[error("rank deficient data: {0}")]
    RankDeficient(String),

    #[error("pole pairing failed: {0}")]
    Pairing(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures caused by the numbers rather than the request
    /// (rank loss, degenerate TLS, defective eigensystems).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateTls(_) | Error::RankDeficient(_) | Error::Pairing(_) | Error::Numerical(_)
        )
    }
}
