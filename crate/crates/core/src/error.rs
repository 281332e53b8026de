use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid knapsack instance: {0}")]
    InvalidInstance(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: hamiltonian has {expected} neurons, state has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{what} of size {size} exceeds the enumeration cap of {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("invalid encoding: {0}")]
    InvalidEncoding(String),

    #[error("invalid penalty weights: {0}")]
    InvalidPenalties(String),

    #[error("hamiltonian of dimension {dimension} does not fit a {rows}x{cols} crossbar")]
    DoesNotFit {
        dimension: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid crossbar config: {0}")]
    InvalidCrossbar(String),

    #[error("device bank of {devices} devices cannot address {count} outcomes")]
    BankTooSmall { devices: usize, count: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid solver config: {0}")]
    InvalidSolver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Usage and configuration problems, as opposed to runtime failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidInstance(_)
                | Error::LengthMismatch { .. }
                | Error::TooLarge { .. }
                | Error::InvalidEncoding(_)
                | Error::InvalidPenalties(_)
                | Error::DoesNotFit { .. }
                | Error::InvalidCrossbar(_)
                | Error::BankTooSmall { .. }
                | Error::InvalidArgument(_)
                | Error::InvalidSolver(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}
