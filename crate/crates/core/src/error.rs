use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("two-qubit gate acts twice on qubit {0}")]
    RepeatedQubit(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("logical measurement outcome is not deterministic")]
    NonDeterministic,

    #[error("ancilla verification failed more than {retries} times")]
    VerificationExhausted { retries: u32 },

    #[error("degenerate least-squares system: {0}")]
    DegenerateFit(String),

    #[error("no pseudo-threshold in range: {0}")]
    NoCrossing(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}
