use thiserror::Error;

use crate::bellcodec::BellOutcome;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("wires must be distinct, got {0} twice")]
    SameWire(usize),

    #[error("bit string of length {got} does not describe a {expected}-qubit register")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid bit {0:?} in basis label (expected '0' or '1')")]
    InvalidBit(char),

    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("register sizes differ: {left} vs {right} qubits")]
    SizeMismatch { left: usize, right: usize },

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("branch {outcome} on wires ({i}, {j}) has zero probability")]
    ImpossibleBranch { outcome: BellOutcome, i: usize, j: usize },

    #[error("projection onto wires ({i}, {j}) has zero probability")]
    ZeroProbability { i: usize, j: usize },

    #[error("outcome ledger is empty")]
    EmptyLedger,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown message code {0:?}")]
    UnknownCode(String),

    #[error("inconsistent measurement record: {0}")]
    InconsistentRecord(String),

    #[error("oracle failure: {0}")]
    OracleFailure(String),
}
