//! Distributed state-vector simulation of circuits made of single-qubit and
//! controlled gates.
//!
//! Qubit `k` is bit `k` of the amplitude index, so a gate on qubit `k` pairs
//! amplitudes `2^k` apart. With `2^p` ranks each rank holds `2^m`
//! contiguous amplitudes (`m = n - p`); qubits `>= m` select the rank.
//!
//! This crate is `no_std` + `alloc`. Threads, transports, file formats and
//! the command line live in the `svsim` crate.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod buffer;
pub mod circuit;
pub mod distributed;
pub mod error;
pub mod exec;
pub mod fusion;
pub mod gate;
pub mod kernels;
pub mod layout;
pub mod oracle;
pub mod perfmodel;
pub mod state;
pub mod wire;

/// Complex double: 8-byte real and 8-byte imaginary part.
pub type Amplitude = num_complex::Complex64;

pub use circuit::{build_iqft, build_qft, random_circuit, Circuit, GateOp};
pub use distributed::{Comm, ExchangeConfig, Solo, Transport};
pub use error::{Error, Result, TransportError};
pub use exec::{Executor, ParallelLevel, Serial, ThreadPolicy};
pub use fusion::{plan_fusion, FusionConfig, FusionPlan, Segment};
pub use gate::GateMatrix;
pub use layout::Layout;
pub use perfmodel::{BoundCase, MachineParams};
pub use state::LocalState;
