//! Concrete transports: in-process ranks and TCP between processes.

mod counting;
mod inproc;
mod mailbox;
mod peers;
mod tcp;

use std::time::Duration;

pub use counting::{Counting, Counts};
pub use inproc::{in_process_cluster, InProcOptions, InProcTransport};
pub use mailbox::Mailbox;
pub use peers::{PeerError, PeerTable};
pub use tcp::{connect_all, TcpOptions, TcpTransport};

use svsim_core::distributed::Transport;
use svsim_core::wire::Tag;
use svsim_core::TransportError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Epoch reserved for barrier tokens; gate epochs never reach it in practice.
pub const BARRIER_EPOCH: u32 = u32::MAX;

/// Full-mesh token exchange: every rank sends a token to every other rank
/// and waits for all of theirs.
pub fn mesh_barrier<T: Transport + ?Sized>(t: &T, round: u32) -> Result<(), TransportError> {
    let tag = Tag::new(BARRIER_EPOCH, round);
    let me = t.rank();
    let mut handles = Vec::new();
    for r in (0..t.size()).filter(|&r| r != me) {
        handles.push(t.isend(r, tag, Vec::new())?);
    }
    let mut missing = Vec::new();
    for r in (0..t.size()).filter(|&r| r != me) {
        match t.recv(r, tag) {
            Ok(_) => {}
            Err(TransportError::Timeout(_)) | Err(TransportError::Disconnected(_)) => missing.push(r),
            Err(e) => return Err(e),
        }
    }
    for h in handles {
        t.wait_send(h)?;
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(TransportError::Timeout(missing))
    }
}
