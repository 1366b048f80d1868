//! Host-side companion to `svsim-core`: thread pool, in-process and TCP
//! transports, the circuit file format, machine probes, benchmark drivers
//! and result tables.

pub mod bench;
pub mod circuit_file;
pub mod pool;
pub mod probe;
pub mod report;
pub mod runner;
pub mod transport;

pub use circuit_file::{load_circuit, parse_circuit, write_circuit, ParseError};
pub use pool::Pool;
pub use report::{GateRecord, OutputFormat, Table};
pub use runner::{run_inproc, run_rank, FusionSetting, RunConfig, RunError, Summary};
