use thiserror::Error;

/// Failures raised by the simulator core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range (limit {limit})")]
    Range { index: usize, limit: usize },

    #[error("invalid layout: {0}")]
    Layout(&'static str),

    #[error("qubit {qubit} is not local (local qubits: {local}); use the distributed path")]
    NotLocal { qubit: usize, local: usize },

    #[error("qubit {qubit} is local (local qubits: {local}); use the local kernel")]
    NotDistributed { qubit: usize, local: usize },

    #[error("control and target must differ (both {0})")]
    SameQubit(usize),

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("gate on qubit {qubit} exceeds block width {block_bits}")]
    FusionContract { qubit: usize, block_bits: usize },

    #[error("invalid argument: {0}")]
    Argument(&'static str),

    #[error("refusing {what}: {required} exceeds cap {cap}")]
    TooLarge {
        what: &'static str,
        required: usize,
        cap: usize,
    },

    #[error("transport failure: {0}")]
    Transport(#[from] TransportError),

    #[error("state is corrupt after an aborted distributed gate")]
    Corrupt,
}

/// Failures reported by a [`Transport`](crate::distributed::Transport).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("peer {0} disconnected")]
    Disconnected(usize),
    #[error("timed out waiting for ranks {0:?}")]
    Timeout(alloc::vec::Vec<usize>),
    #[error("malformed frame: {0}")]
    Frame(&'static str),
    #[error("payload length {got} does not match expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("rank {0} is not part of this communicator")]
    NoSuchRank(usize),
    #[error("{0}")]
    Other(alloc::string::String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
