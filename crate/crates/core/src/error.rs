use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid configuration: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error(
        "ancilla coherence {value} violates positivity bound |lambda| <= 1/Z_A = {max}"
    )]
    CoherenceBound { value: f64, max: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("operation requires {required}")]
    ModeMismatch { required: &'static str },

    #[error("operation requires resonance, detuning is {delta}")]
    NotResonant { delta: f64 },

    #[error("quantity {found} not accepted here (expected {expected})")]
    WrongQuantity {
        expected: &'static str,
        found: &'static str,
    },

    #[error("coherent work expressions disagree: system side {system}, ancilla side {ancilla}")]
    CoherentWorkMismatch { system: f64, ancilla: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
