//! Tag-matched receive queues shared by the in-process and TCP transports.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use svsim_core::wire::Tag;
use svsim_core::TransportError;

struct Envelope {
    payload: Vec<u8>,
    ready_at: Option<Instant>,
}

#[derive(Default)]
struct Inner {
    queues: HashMap<(usize, Tag), VecDeque<Envelope>>,
    gone: HashSet<usize>,
}

/// Incoming messages for one rank, keyed by `(source, tag)`.
#[derive(Default)]
pub struct Mailbox {
    inner: Mutex<Inner>,
    cv: Condvar,
}

impl Mailbox {
    pub fn deliver(&self, src: usize, tag: Tag, payload: Vec<u8>, ready_at: Option<Instant>) {
        let mut g = self.inner.lock().unwrap();
        g.queues
            .entry((src, tag))
            .or_default()
            .push_back(Envelope { payload, ready_at });
        drop(g);
        self.cv.notify_all();
    }

    /// Mark `src` as disconnected; waiting receivers from it fail.
    pub fn close(&self, src: usize) {
        self.inner.lock().unwrap().gone.insert(src);
        self.cv.notify_all();
    }

    pub fn take(&self, src: usize, tag: Tag, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        let deadline = Instant::now() + timeout;
        let mut g = self.inner.lock().unwrap();
        loop {
            let now = Instant::now();
            let mut wait_until = deadline;
            if let Some(q) = g.queues.get_mut(&(src, tag)) {
                match q.front().and_then(|e| e.ready_at) {
                    Some(t) if t > now => wait_until = wait_until.min(t),
                    _ if !q.is_empty() => {
                        let e = q.pop_front().unwrap();
                        if q.is_empty() {
                            g.queues.remove(&(src, tag));
                        }
                        return Ok(e.payload);
                    }
                    _ => {}
                }
            }
            if g.gone.contains(&src) && !g.queues.contains_key(&(src, tag)) {
                return Err(TransportError::Disconnected(src));
            }
            if now >= deadline {
                return Err(TransportError::Timeout(vec![src]));
            }
            g = self.cv.wait_timeout(g, wait_until - now).unwrap().0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_by_source_and_tag_in_order() {
        let mb = Mailbox::default();
        let t0 = Tag::new(1, 0);
        let t1 = Tag::new(1, 1);
        mb.deliver(2, t1, vec![9], None);
        mb.deliver(2, t0, vec![1], None);
        mb.deliver(2, t0, vec![2], None);
        let wait = Duration::from_secs(1);
        assert_eq!(mb.take(2, t0, wait).unwrap(), vec![1]);
        assert_eq!(mb.take(2, t0, wait).unwrap(), vec![2]);
        assert_eq!(mb.take(2, t1, wait).unwrap(), vec![9]);
        assert!(matches!(
            mb.take(3, t0, Duration::from_millis(10)),
            Err(TransportError::Timeout(r)) if r == vec![3]
        ));
        mb.close(3);
        assert_eq!(mb.take(3, t0, wait), Err(TransportError::Disconnected(3)));
    }

    #[test]
    fn holds_back_until_ready() {
        let mb = Mailbox::default();
        let start = Instant::now();
        mb.deliver(0, Tag::new(0, 0), vec![7], Some(start + Duration::from_millis(30)));
        assert_eq!(mb.take(0, Tag::new(0, 0), Duration::from_secs(2)).unwrap(), vec![7]);
        assert!(start.elapsed() >= Duration::from_millis(30));
    }
}
