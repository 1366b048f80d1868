//! One TCP connection per ordered rank pair, carrying length-prefixed frames.

use std::io::{Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{mpsc, Arc};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use svsim_core::distributed::Transport;
use svsim_core::wire::{Frame, Tag, HEADER_LEN};
use svsim_core::TransportError;

use super::mailbox::Mailbox;
use super::{mesh_barrier, PeerTable, DEFAULT_TIMEOUT};

#[derive(Debug, Clone, Copy)]
pub struct TcpOptions {
    /// How long to wait for every peer to connect.
    pub connect_timeout: Duration,
    pub recv_timeout: Duration,
}

impl Default for TcpOptions {
    fn default() -> Self {
        Self {
            connect_timeout: DEFAULT_TIMEOUT,
            recv_timeout: DEFAULT_TIMEOUT,
        }
    }
}

struct WriteJob {
    tag: Tag,
    payload: Vec<u8>,
    done: mpsc::Sender<Result<(), TransportError>>,
}

pub struct TcpTransport {
    rank: usize,
    size: usize,
    mailbox: Arc<Mailbox>,
    writers: Vec<Option<mpsc::Sender<WriteJob>>>,
    writer_threads: Vec<JoinHandle<()>>,
    recv_timeout: Duration,
    barriers: AtomicU32,
}

fn io_err(e: std::io::Error) -> TransportError {
    TransportError::Other(e.to_string())
}

fn read_frames(mut stream: TcpStream, src: usize, mailbox: Arc<Mailbox>) {
    let mut header = [0u8; HEADER_LEN];
    loop {
        if stream.read_exact(&mut header).is_err() {
            break;
        }
        let (tag, len) = Frame::parse_header(&header);
        let mut payload = vec![0u8; len as usize];
        if stream.read_exact(&mut payload).is_err() {
            break;
        }
        mailbox.deliver(src, tag, payload, None);
    }
    mailbox.close(src);
}

fn write_frames(mut stream: TcpStream, dest: usize, jobs: mpsc::Receiver<WriteJob>) {
    for job in jobs {
        let header = Frame::header(job.tag, job.payload.len());
        let res = stream
            .write_all(&header)
            .and_then(|_| stream.write_all(&job.payload))
            .map_err(|_| TransportError::Disconnected(dest));
        let failed = res.is_err();
        let _ = job.done.send(res);
        if failed {
            break;
        }
    }
    let _ = stream.shutdown(Shutdown::Write);
}

/// Bind this rank's address, connect to every other rank, and return once a
/// barrier across all ranks has passed.
pub fn connect_all(table: &PeerTable, rank: usize, opts: TcpOptions) -> Result<TcpTransport, TransportError> {
    let size = table.len();
    if rank >= size {
        return Err(TransportError::NoSuchRank(rank));
    }
    let deadline = Instant::now() + opts.connect_timeout;
    let mailbox = Arc::new(Mailbox::default());

    let listener = TcpListener::bind(table.addr(rank)).map_err(io_err)?;
    listener.set_nonblocking(true).map_err(io_err)?;
    let accept_mailbox = Arc::clone(&mailbox);
    let acceptor = thread::spawn(move || {
        let mut accepted = 0;
        while accepted + 1 < size && Instant::now() < deadline {
            match listener.accept() {
                Ok((mut s, _)) => {
                    let _ = s.set_nonblocking(false);
                    let mut hello = [0u8; 4];
                    if s.read_exact(&mut hello).is_err() {
                        continue;
                    }
                    let src = u32::from_le_bytes(hello) as usize;
                    let mb = Arc::clone(&accept_mailbox);
                    let _ = s.set_nodelay(true);
                    thread::spawn(move || read_frames(s, src, mb));
                    accepted += 1;
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    thread::sleep(Duration::from_millis(5))
                }
                Err(_) => break,
            }
        }
    });

    let mut writers: Vec<Option<mpsc::Sender<WriteJob>>> = (0..size).map(|_| None).collect();
    let mut writer_threads = Vec::new();
    let mut missing = Vec::new();
    for peer in (0..size).filter(|&p| p != rank) {
        let Some(mut stream) = connect_with_retry(table.addr(peer), deadline) else {
            missing.push(peer);
            continue;
        };
        let _ = stream.set_nodelay(true);
        if stream.write_all(&(rank as u32).to_le_bytes()).is_err() {
            missing.push(peer);
            continue;
        }
        let (tx, rx) = mpsc::channel();
        writers[peer] = Some(tx);
        writer_threads.push(thread::spawn(move || write_frames(stream, peer, rx)));
    }
    let mut transport = TcpTransport {
        rank,
        size,
        mailbox,
        writers,
        writer_threads,
        recv_timeout: deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(10)),
        barriers: AtomicU32::new(0),
    };
    if !missing.is_empty() {
        return Err(TransportError::Timeout(missing));
    }
    transport.barrier()?;
    let _ = acceptor.join();
    transport.recv_timeout = opts.recv_timeout;
    Ok(transport)
}

fn connect_with_retry(addr: &str, deadline: Instant) -> Option<TcpStream> {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return None;
        }
        if let Ok(mut addrs) = addr.to_socket_addrs() {
            if let Some(sa) = addrs.next() {
                let left = deadline - now;
                if let Ok(s) = TcpStream::connect_timeout(&sa, left.min(Duration::from_secs(1))) {
                    return Some(s);
                }
            }
        }
        thread::sleep(Duration::from_millis(20));
    }
}

pub type TcpSend = mpsc::Receiver<Result<(), TransportError>>;

pub struct TcpRecv {
    src: usize,
    tag: Tag,
}

impl Transport for TcpTransport {
    type SendHandle = TcpSend;
    type RecvHandle = TcpRecv;

    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn isend(&self, dest: usize, tag: Tag, payload: Vec<u8>) -> Result<TcpSend, TransportError> {
        let (done, handle) = mpsc::channel();
        if dest == self.rank {
            self.mailbox.deliver(dest, tag, payload, None);
            let _ = done.send(Ok(()));
            return Ok(handle);
        }
        let w = self
            .writers
            .get(dest)
            .ok_or(TransportError::NoSuchRank(dest))?
            .as_ref()
            .ok_or(TransportError::Disconnected(dest))?;
        w.send(WriteJob { tag, payload, done })
            .map_err(|_| TransportError::Disconnected(dest))?;
        Ok(handle)
    }

    fn irecv(&self, src: usize, tag: Tag) -> Result<TcpRecv, TransportError> {
        if src >= self.size {
            return Err(TransportError::NoSuchRank(src));
        }
        Ok(TcpRecv { src, tag })
    }

    fn wait_send(&self, h: TcpSend) -> Result<(), TransportError> {
        h.recv().unwrap_or(Err(TransportError::Other("writer thread exited".into())))
    }

    fn wait_recv(&self, h: TcpRecv) -> Result<Vec<u8>, TransportError> {
        self.mailbox.take(h.src, h.tag, self.recv_timeout)
    }

    fn barrier(&self) -> Result<(), TransportError> {
        mesh_barrier(self, self.barriers.fetch_add(1, Ordering::Relaxed))
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        self.writers.clear();
        for t in self.writer_threads.drain(..) {
            let _ = t.join();
        }
    }
}
