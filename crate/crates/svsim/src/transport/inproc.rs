//! Ranks as threads of one process, exchanging frames through mailboxes.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use svsim_core::distributed::Transport;
use svsim_core::wire::Tag;
use svsim_core::TransportError;

use super::mailbox::Mailbox;
use super::{mesh_barrier, DEFAULT_TIMEOUT};

#[derive(Debug, Clone, Copy)]
pub struct InProcOptions {
    /// Receives give up after this long.
    pub timeout: Duration,
    /// Simulated link: each message occupies the sender→receiver link for
    /// this long, and messages on one link are serialised.
    pub link_latency: Option<Duration>,
}

impl Default for InProcOptions {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_TIMEOUT,
            link_latency: None,
        }
    }
}

pub struct InProcTransport {
    rank: usize,
    boxes: Arc<Vec<Mailbox>>,
    opts: InProcOptions,
    link_free: Mutex<Vec<Instant>>,
    barriers: AtomicU32,
}

/// Build `size` connected endpoints; hand one to each rank's thread.
pub fn in_process_cluster(size: usize, opts: InProcOptions) -> Vec<InProcTransport> {
    let boxes: Arc<Vec<Mailbox>> = Arc::new((0..size).map(|_| Mailbox::default()).collect());
    (0..size)
        .map(|rank| InProcTransport {
            rank,
            boxes: Arc::clone(&boxes),
            opts,
            link_free: Mutex::new(vec![Instant::now(); size]),
            barriers: AtomicU32::new(0),
        })
        .collect()
}

pub struct InProcRecv {
    src: usize,
    tag: Tag,
}

impl InProcTransport {
    fn check(&self, rank: usize) -> Result<(), TransportError> {
        if rank >= self.boxes.len() {
            Err(TransportError::NoSuchRank(rank))
        } else {
            Ok(())
        }
    }
}

impl Transport for InProcTransport {
    type SendHandle = ();
    type RecvHandle = InProcRecv;

    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.boxes.len()
    }

    fn isend(&self, dest: usize, tag: Tag, payload: Vec<u8>) -> Result<(), TransportError> {
        self.check(dest)?;
        let ready_at = self.opts.link_latency.map(|lat| {
            let mut links = self.link_free.lock().unwrap();
            let start = links[dest].max(Instant::now());
            links[dest] = start + lat;
            links[dest]
        });
        self.boxes[dest].deliver(self.rank, tag, payload, ready_at);
        Ok(())
    }

    fn irecv(&self, src: usize, tag: Tag) -> Result<InProcRecv, TransportError> {
        self.check(src)?;
        Ok(InProcRecv { src, tag })
    }

    fn wait_send(&self, _: ()) -> Result<(), TransportError> {
        Ok(())
    }

    fn wait_recv(&self, h: InProcRecv) -> Result<Vec<u8>, TransportError> {
        self.boxes[self.rank].take(h.src, h.tag, self.opts.timeout)
    }

    fn barrier(&self) -> Result<(), TransportError> {
        mesh_barrier(self, self.barriers.fetch_add(1, Ordering::Relaxed))
    }
}

impl Drop for InProcTransport {
    fn drop(&mut self) {
        for (r, b) in self.boxes.iter().enumerate() {
            if r != self.rank {
                b.close(self.rank);
            }
        }
    }
}
