use std::sync::atomic::{AtomicU64, Ordering};

use svsim_core::distributed::Transport;
use svsim_core::wire::Tag;
use svsim_core::TransportError;

/// Wraps a transport and counts payload bytes and messages in each direction.
pub struct Counting<T> {
    inner: T,
    sent: AtomicU64,
    received: AtomicU64,
    messages: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub messages_sent: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.bytes_sent + self.bytes_received
    }
}

impl<T> Counting<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            sent: AtomicU64::new(0),
            received: AtomicU64::new(0),
            messages: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }

    /// Counts since the last call; resets the counters.
    pub fn take_counts(&self) -> Counts {
        Counts {
            bytes_sent: self.sent.swap(0, Ordering::Relaxed),
            bytes_received: self.received.swap(0, Ordering::Relaxed),
            messages_sent: self.messages.swap(0, Ordering::Relaxed),
        }
    }
}

impl<T: Transport> Transport for Counting<T> {
    type SendHandle = T::SendHandle;
    type RecvHandle = T::RecvHandle;

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn size(&self) -> usize {
        self.inner.size()
    }

    fn isend(&self, dest: usize, tag: Tag, payload: Vec<u8>) -> Result<Self::SendHandle, TransportError> {
        self.sent.fetch_add(payload.len() as u64, Ordering::Relaxed);
        self.messages.fetch_add(1, Ordering::Relaxed);
        self.inner.isend(dest, tag, payload)
    }

    fn irecv(&self, src: usize, tag: Tag) -> Result<Self::RecvHandle, TransportError> {
        self.inner.irecv(src, tag)
    }

    fn wait_send(&self, h: Self::SendHandle) -> Result<(), TransportError> {
        self.inner.wait_send(h)
    }

    fn wait_recv(&self, h: Self::RecvHandle) -> Result<Vec<u8>, TransportError> {
        let b = self.inner.wait_recv(h)?;
        self.received.fetch_add(b.len() as u64, Ordering::Relaxed);
        Ok(b)
    }

    fn barrier(&self) -> Result<(), TransportError> {
        self.inner.barrier()
    }
}
