use std::path::PathBuf;

use crate::linalg::StateVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the configured cap of {cap}")]
    DimensionCap { dim: u128, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("expectation has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    /// Power iteration ran out of iterations. Carries the best iterate.
    #[error(
        "power iteration did not converge after {iterations} iterations (best estimate {value})"
    )]
    NotConverged {
        iterations: usize,
        value: f64,
        witness: Box<StateVector>,
    },

    #[error("invalid encoding scheme: {0}")]
    Scheme(String),

    #[error("invalid code: {0}")]
    Code(String),

    #[error("symbol {symbol} out of range [0, {q})")]
    SymbolOutOfRange { symbol: usize, q: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid strategy: {0}")]
    Strategy(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("transcript inconsistent: {0}")]
    Transcript(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
