use thiserror::Error;

/// Errors produced by the library.
///
/// Every variant except [`Error::Io`] is a validation failure of the caller's
/// input; the CLI maps those to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid register: {0}")]
    InvalidRegister(String),

    #[error("invalid lattice spec: {0}")]
    InvalidLattice(String),

    #[error("length mismatch: expected {expected} bits, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid bitstring: {0}")]
    InvalidBitstring(String),

    #[error("probability {value} for {name} is outside [{lo}, {hi}]")]
    InvalidProbability {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("instance with {n} vertices exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("rank {rank} out of range 1..=2^{n}")]
    RankOutOfRange { n: usize, rank: u128 },

    #[error("infeasible placement: {0}")]
    InfeasiblePlacement(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("campaign: {0}")]
    Campaign(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for every error caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        // serde_json already reports "at line L column C".
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
