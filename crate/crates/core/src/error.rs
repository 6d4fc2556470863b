use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("qubit {index} out of range for a {n}-qubit system")]
    QubitOutOfRange { index: usize, n: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("qubit selection must not be empty")]
    EmptySelection,
    #[error("{n} qubits exceeds the configured cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("Kraus operators are not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("register violation: {0}")]
    RegisterViolation(String),
    #[error("branch count {count} exceeds the exact-enumeration cap {cap}")]
    BranchCap { count: u128, cap: u128 },
    #[error("malformed protocol: {0}")]
    MalformedProtocol(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
