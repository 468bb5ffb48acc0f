use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix size overflow: {rows}x{cols} exceeds the supported maximum")]
    SizeOverflow { rows: usize, cols: usize },

    #[error("unsupported gate `{0}`")]
    UnsupportedGate(String),

    #[error("wire {wire} out of range for a {n_wires}-wire register")]
    WireOutOfRange { wire: usize, n_wires: usize },

    #[error("coincident wires: {0}")]
    CoincidentWires(String),

    #[error("matrix is not unitary (max |U^dag U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("unsupported interexchange pair ({0}, {1})")]
    UnsupportedPair(usize, usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid probability distribution: {0}")]
    InvalidProbabilities(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("integration diverged: {0}")]
    Integration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    /// Process exit status for this error: 1 for failed checks, 2 for bad
    /// input or configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verification(_) | Error::NotUnitary { .. } | Error::Integration(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
