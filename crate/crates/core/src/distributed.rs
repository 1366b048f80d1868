//! Gates whose qubits live in the rank bits of the global index.
//!
//! A gate on qubit `k >= m` pairs every local element of rank `r` with the
//! element at the same local offset on rank `r ^ 2^(k-m)`. The rank whose
//! bit `k-m` is clear (the zero side) holds the first element of each pair.
//! Partners swap complementary halves of the participating elements: the
//! zero side computes the first half of the pairs, the one side the second.
//! Each side sends the half it does not compute, applies the gate to its
//! own element and the received one, and sends the partner's updated
//! elements back. The exchange runs in chunks so temporary storage stays
//! bounded, and the next chunk's transfer is in flight while the current
//! chunk is computed.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::circuit::GateOp;
use crate::error::{Error, Result, TransportError};
use crate::exec::Executor;
use crate::gate::GateMatrix;
use crate::kernels;
use crate::layout::Layout;
use crate::perfmodel::BoundCase;
use crate::state::LocalState;
use crate::wire::{decode_amps, decode_amps_into, encode_amps, Tag};
use crate::Amplitude;

/// Ordered, reliable, bit-exact point-to-point messaging between ranks.
///
/// Messages from one source to one destination with the same [`Tag`] are
/// delivered in send order. A completed send handle means the payload has
/// been handed off and will not change.
pub trait Transport {
    type SendHandle;
    type RecvHandle;

    fn rank(&self) -> usize;
    fn size(&self) -> usize;

    fn isend(&self, dest: usize, tag: Tag, payload: Vec<u8>) -> Result<Self::SendHandle, TransportError>;
    fn irecv(&self, src: usize, tag: Tag) -> Result<Self::RecvHandle, TransportError>;
    fn wait_send(&self, handle: Self::SendHandle) -> Result<(), TransportError>;
    fn wait_recv(&self, handle: Self::RecvHandle) -> Result<Vec<u8>, TransportError>;

    fn send(&self, dest: usize, tag: Tag, payload: Vec<u8>) -> Result<(), TransportError> {
        let h = self.isend(dest, tag, payload)?;
        self.wait_send(h)
    }

    fn recv(&self, src: usize, tag: Tag) -> Result<Vec<u8>, TransportError> {
        let h = self.irecv(src, tag)?;
        self.wait_recv(h)
    }

    fn barrier(&self) -> Result<(), TransportError>;
}

/// The trivial one-rank communicator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Solo;

impl Transport for Solo {
    type SendHandle = ();
    type RecvHandle = ();

    fn rank(&self) -> usize {
        0
    }
    fn size(&self) -> usize {
        1
    }
    fn isend(&self, dest: usize, _: Tag, _: Vec<u8>) -> Result<(), TransportError> {
        Err(TransportError::NoSuchRank(dest))
    }
    fn irecv(&self, src: usize, _: Tag) -> Result<(), TransportError> {
        Err(TransportError::NoSuchRank(src))
    }
    fn wait_send(&self, _: ()) -> Result<(), TransportError> {
        Ok(())
    }
    fn wait_recv(&self, _: ()) -> Result<Vec<u8>, TransportError> {
        Err(TransportError::NoSuchRank(0))
    }
    fn barrier(&self) -> Result<(), TransportError> {
        Ok(())
    }
}

/// A transport plus the running tag epoch. Every collective step takes a
/// fresh epoch, so ranks must issue the same sequence of operations.
pub struct Comm<'a, T: Transport> {
    transport: &'a T,
    epoch: u32,
}

impl<'a, T: Transport> Comm<'a, T> {
    pub fn new(transport: &'a T) -> Self {
        Self { transport, epoch: 0 }
    }

    pub fn transport(&self) -> &'a T {
        self.transport
    }

    pub fn rank(&self) -> usize {
        self.transport.rank()
    }

    pub fn size(&self) -> usize {
        self.transport.size()
    }

    pub fn next_epoch(&mut self) -> u32 {
        let e = self.epoch;
        self.epoch = self.epoch.wrapping_add(1);
        e
    }

    fn check_layout(&self, layout: &Layout) -> Result<()> {
        if self.size() != layout.ranks() {
            return Err(Error::Layout("transport size does not match 2^p ranks"));
        }
        if self.rank() != layout.rank() {
            return Err(Error::Layout("transport rank does not match layout rank"));
        }
        Ok(())
    }
}

/// Default minimum chunk size for automatic chunking.
pub const DEFAULT_SATURATION_FLOOR: usize = 4 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeConfig {
    /// Automatic chunks are this many bytes (or the whole half if smaller).
    /// Explicit chunks may not be smaller.
    pub saturation_floor_bytes: usize,
    /// Fixed chunk size in amplitudes; must be a power of two.
    pub chunk_amps: Option<usize>,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        Self {
            saturation_floor_bytes: DEFAULT_SATURATION_FLOOR,
            chunk_amps: None,
        }
    }
}

impl ExchangeConfig {
    pub fn with_chunk_amps(chunk: usize) -> Self {
        Self {
            saturation_floor_bytes: 0,
            chunk_amps: Some(chunk),
        }
    }
}

/// Which local elements take part in an exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    All,
    /// Only local indices whose bit `c` is set.
    ControlSet(usize),
}

impl Selection {
    /// Number of participating elements in a slice of `2^m`.
    pub fn len(&self, m: usize) -> usize {
        match *self {
            Self::All => 1 << m,
            Self::ControlSet(_) => 1 << (m - 1),
        }
    }

    /// Local index of the `p`-th participating element.
    #[inline]
    pub fn local_index(&self, p: usize) -> usize {
        match *self {
            Self::All => p,
            Self::ControlSet(c) => ((p >> c) << (c + 1)) | (1 << c) | (p & ((1 << c) - 1)),
        }
    }

    fn gather(&self, amps: &[Amplitude], range: Range<usize>) -> Vec<Amplitude> {
        match self {
            Self::All => amps[range].to_vec(),
            _ => range.map(|p| amps[self.local_index(p)]).collect(),
        }
    }

    fn scatter(&self, amps: &mut [Amplitude], start: usize, src: &[Amplitude]) {
        match self {
            Self::All => amps[start..start + src.len()].copy_from_slice(src),
            _ => {
                for (i, a) in src.iter().enumerate() {
                    amps[self.local_index(start + i)] = *a;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    FirstHalf,
    SecondHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangePlan {
    pub partner: usize,
    pub this_rank_computes: Half,
    /// Participating elements per rank.
    pub packed_len: usize,
    pub chunk_amps: usize,
    /// Amplitudes of scratch for partner data: one chunk, or two when the
    /// exchange takes more than one step.
    pub temp_capacity: usize,
}

impl ExchangePlan {
    /// Plan for a gate pairing ranks across qubit `pair_qubit >= m`.
    pub fn new(layout: &Layout, pair_qubit: usize, selection: Selection, cfg: &ExchangeConfig) -> Result<Self> {
        let m = layout.local_qubits();
        layout.check_qubit(pair_qubit)?;
        if pair_qubit < m {
            return Err(Error::NotDistributed { qubit: pair_qubit, local: m });
        }
        if let Selection::ControlSet(c) = selection {
            if c >= m {
                return Err(Error::NotLocal { qubit: c, local: m });
            }
        }
        let bit = pair_qubit - m;
        let partner = layout.rank() ^ (1 << bit);
        let this_rank_computes = if layout.rank_bit(pair_qubit) {
            Half::SecondHalf
        } else {
            Half::FirstHalf
        };
        let packed_len = selection.len(m);
        let half = packed_len.div_ceil(2);
        let floor_amps = (cfg.saturation_floor_bytes / 16).min(half);
        let chunk_amps = match cfg.chunk_amps {
            // a fixed chunk larger than this exchange's half (case (c) halves
            // are half as long) shrinks to the half
            Some(c) => {
                if !c.is_power_of_two() {
                    return Err(Error::Argument("chunk must be a power of two"));
                }
                let c = c.min(half.next_power_of_two());
                if c < floor_amps {
                    return Err(Error::Argument("chunk is below the saturation floor"));
                }
                c
            }
            None => prev_power_of_two(floor_amps.max(1)),
        };
        let temp_capacity = if chunk_amps >= half { chunk_amps } else { 2 * chunk_amps };
        Ok(Self {
            partner,
            this_rank_computes,
            packed_len,
            chunk_amps,
            temp_capacity,
        })
    }

    /// `(computed range, sent range)` in packed coordinates.
    pub fn ranges(&self) -> (Range<usize>, Range<usize>) {
        let first = self.packed_len.div_ceil(2);
        match self.this_rank_computes {
            Half::FirstHalf => (0..first, first..self.packed_len),
            Half::SecondHalf => (first..self.packed_len, 0..first),
        }
    }

    pub fn steps(&self) -> usize {
        let (a, b) = self.ranges();
        a.len().max(b.len()).div_ceil(self.chunk_amps)
    }
}

fn prev_power_of_two(x: usize) -> usize {
    1 << (usize::BITS - 1 - x.leading_zeros())
}

/// Byte and memory accounting for one exchange.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExchangeStats {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub temp_high_water_bytes: usize,
    pub steps: usize,
}

struct Meter {
    live: usize,
    high: usize,
}

impl Meter {
    fn take(&mut self, amps: usize) {
        self.live += amps * 16;
        self.high = self.high.max(self.live);
    }
    fn give(&mut self, amps: usize) {
        self.live -= amps * 16;
    }
}

fn piece(r: &Range<usize>, j: usize, c: usize) -> Range<usize> {
    let s = (r.start + j * c).min(r.end);
    s..(s + c).min(r.end)
}

struct Pending<H> {
    handle: H,
    range: Range<usize>,
}

/// In-flight state of one exchange on one rank.
struct Pipeline<'t, T: Transport> {
    transport: &'t T,
    partner: usize,
    epoch: u32,
    selection: Selection,
    chunk: usize,
    mine: Range<usize>,
    theirs: Range<usize>,
    sends: VecDeque<T::SendHandle>,
    incoming: VecDeque<Pending<T::RecvHandle>>,
    returns: VecDeque<Pending<T::RecvHandle>>,
    meter: Meter,
    stats: ExchangeStats,
}

impl<T: Transport> Pipeline<'_, T> {
    fn out_tag(&self, j: usize) -> Tag {
        Tag::new(self.epoch, (2 * j) as u32)
    }

    fn back_tag(&self, j: usize) -> Tag {
        Tag::new(self.epoch, (2 * j + 1) as u32)
    }

    /// Ship our elements of the partner's half for step `j`, reserve scratch
    /// for the partner's elements of ours, and expect the returned results.
    fn post(&mut self, j: usize, amps: &[Amplitude]) -> Result<(), TransportError> {
        let out = piece(&self.theirs, j, self.chunk);
        if !out.is_empty() {
            let payload = encode_amps(&self.selection.gather(amps, out.clone()));
            self.stats.bytes_sent += payload.len() as u64;
            let h = self.transport.isend(self.partner, self.out_tag(j), payload)?;
            self.sends.push_back(h);
            let handle = self.transport.irecv(self.partner, self.back_tag(j))?;
            self.returns.push_back(Pending { handle, range: out });
        }
        let inn = piece(&self.mine, j, self.chunk);
        if !inn.is_empty() {
            self.meter.take(inn.len());
            let handle = self.transport.irecv(self.partner, self.out_tag(j))?;
            self.incoming.push_back(Pending { handle, range: inn });
        }
        Ok(())
    }

    /// Compute step `j` on the partner's data and send the results back.
    fn compute<X: Executor>(
        &mut self,
        j: usize,
        amps: &mut [Amplitude],
        q: &GateMatrix,
        zero_side: bool,
        exec: &X,
    ) -> Result<(), TransportError> {
        if piece(&self.mine, j, self.chunk).is_empty() {
            return Ok(());
        }
        let inc = self.incoming.pop_front().expect("posted receive");
        let bytes = self.transport.wait_recv(inc.handle)?;
        self.stats.bytes_received += bytes.len() as u64;
        if bytes.len() != inc.range.len() * 16 {
            return Err(TransportError::Length {
                got: bytes.len(),
                expected: inc.range.len() * 16,
            });
        }
        let mut other = decode_amps(&bytes)?;
        drop(bytes);
        compute_chunk(amps, self.selection, inc.range.clone(), &mut other, q, zero_side, exec);
        let payload = encode_amps(&other);
        drop(other);
        self.meter.give(inc.range.len());
        self.stats.bytes_sent += payload.len() as u64;
        let h = self.transport.isend(self.partner, self.back_tag(j), payload)?;
        self.sends.push_back(h);
        Ok(())
    }

    /// Receive the partner's results for step `j` into our slice.
    fn finish(&mut self, j: usize, amps: &mut [Amplitude], buf: &mut [Amplitude]) -> Result<(), TransportError> {
        if piece(&self.theirs, j, self.chunk).is_empty() {
            return Ok(());
        }
        let ret = self.returns.pop_front().expect("posted return");
        let bytes = self.transport.wait_recv(ret.handle)?;
        self.stats.bytes_received += bytes.len() as u64;
        let dst = &mut buf[..ret.range.len()];
        decode_amps_into(&bytes, dst)?;
        self.selection.scatter(amps, ret.range.start, dst);
        Ok(())
    }
}

/// Run the chunked half-exchange for one gate on this rank's slice.
///
/// `amps` is the whole local slice; `selection` picks the participating
/// elements. Messages are tagged with `epoch`; phase `2j` carries step `j`
/// outbound and `2j + 1` its return. Step `j + 1` is posted before step `j`
/// is computed, and step `j - 1`'s results are collected after it.
pub fn chunked_exchange_pipeline<T: Transport, X: Executor>(
    amps: &mut [Amplitude],
    selection: Selection,
    plan: &ExchangePlan,
    q: &GateMatrix,
    epoch: u32,
    transport: &T,
    exec: &X,
) -> Result<ExchangeStats, TransportError> {
    let (mine, theirs) = plan.ranges();
    let steps = plan.steps();
    let zero_side = plan.this_rank_computes == Half::FirstHalf;
    let mut pipe = Pipeline {
        transport,
        partner: plan.partner,
        epoch,
        selection,
        chunk: plan.chunk_amps,
        mine,
        theirs,
        sends: VecDeque::new(),
        incoming: VecDeque::new(),
        returns: VecDeque::new(),
        meter: Meter { live: 0, high: 0 },
        stats: ExchangeStats {
            steps,
            ..Default::default()
        },
    };
    let mut ret_buf = vec![Amplitude::new(0.0, 0.0); plan.chunk_amps];
    if steps > 0 {
        pipe.post(0, amps)?;
    }
    for j in 0..steps {
        if j + 1 < steps {
            pipe.post(j + 1, amps)?;
        }
        pipe.compute(j, amps, q, zero_side, exec)?;
        if j >= 1 {
            pipe.finish(j - 1, amps, &mut ret_buf)?;
        }
    }
    if steps > 0 {
        pipe.finish(steps - 1, amps, &mut ret_buf)?;
    }
    while let Some(h) = pipe.sends.pop_front() {
        transport.wait_send(h)?;
    }
    pipe.stats.temp_high_water_bytes = pipe.meter.high;
    Ok(pipe.stats)
}

/// Apply the pair update to `(own, other)` elements for one chunk. The zero
/// side owns the first element of each pair.
fn compute_chunk<X: Executor>(
    amps: &mut [Amplitude],
    selection: Selection,
    range: Range<usize>,
    other: &mut [Amplitude],
    q: &GateMatrix,
    zero_side: bool,
    exec: &X,
) {
    let mut run = |own: &mut [Amplitude]| {
        if zero_side {
            kernels::pairs_on(own, other, q, exec);
        } else {
            kernels::pairs_on(other, own, q, exec);
        }
    };
    match selection {
        Selection::All => run(&mut amps[range]),
        _ => {
            let mut own = selection.gather(amps, range.clone());
            run(&mut own);
            selection.scatter(amps, range.start, &own);
        }
    }
}

/// Per-gate accounting returned by the distributed entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateStats {
    pub case: BoundCase,
    pub exchange: Option<ExchangeStats>,
}

impl GateStats {
    fn local(case: BoundCase) -> Self {
        Self { case, exchange: None }
    }

    /// Payload bytes sent plus received by this rank.
    pub fn wire_bytes(&self) -> u64 {
        self.exchange.map_or(0, |e| e.bytes_sent + e.bytes_received)
    }
}

#[allow(clippy::too_many_arguments)]
fn run_exchange<T: Transport, X: Executor>(
    state: &mut LocalState,
    pair_qubit: usize,
    selection: Selection,
    q: &GateMatrix,
    epoch: u32,
    transport: &T,
    cfg: &ExchangeConfig,
    exec: &X,
) -> Result<ExchangeStats> {
    let plan = ExchangePlan::new(state.layout(), pair_qubit, selection, cfg)?;
    match chunked_exchange_pipeline(state.amps_mut(), selection, &plan, q, epoch, transport, exec) {
        Ok(s) => Ok(s),
        Err(e) => {
            state.mark_corrupt();
            Err(e.into())
        }
    }
}

/// Single-qubit gate on a rank qubit `k >= m`.
pub fn apply_single_distributed<T: Transport, X: Executor>(
    state: &mut LocalState,
    k: usize,
    q: &GateMatrix,
    comm: &mut Comm<'_, T>,
    cfg: &ExchangeConfig,
    exec: &X,
) -> Result<GateStats> {
    let layout = *state.layout();
    comm.check_layout(&layout)?;
    layout.check_qubit(k)?;
    if layout.is_local(k) {
        return Err(Error::NotDistributed {
            qubit: k,
            local: layout.local_qubits(),
        });
    }
    state.ensure_intact()?;
    let epoch = comm.next_epoch();
    let ex = run_exchange(state, k, Selection::All, q, epoch, comm.transport(), cfg, exec)?;
    Ok(GateStats {
        case: BoundCase::SingleRemote,
        exchange: Some(ex),
    })
}

/// Controlled gate with any placement of control and target.
pub fn apply_controlled_distributed<T: Transport, X: Executor>(
    state: &mut LocalState,
    c: usize,
    t: usize,
    q: &GateMatrix,
    comm: &mut Comm<'_, T>,
    cfg: &ExchangeConfig,
    exec: &X,
) -> Result<GateStats> {
    if c == t {
        return Err(Error::SameQubit(c));
    }
    let layout = *state.layout();
    comm.check_layout(&layout)?;
    layout.check_qubit(c)?;
    layout.check_qubit(t)?;
    state.ensure_intact()?;
    let case = BoundCase::classify(&GateOp::controlled(c, t, *q), layout.local_qubits());
    let epoch = comm.next_epoch();
    match case {
        BoundCase::ControlledLocal => {
            kernels::apply_controlled_local(state, c, t, q, exec)?;
            Ok(GateStats::local(case))
        }
        BoundCase::ControlledRankControl => {
            if layout.rank_bit(c) {
                kernels::apply_single_local(state, t, q, exec)?;
            }
            Ok(GateStats::local(case))
        }
        BoundCase::ControlledRemoteTarget => {
            let ex = run_exchange(state, t, Selection::ControlSet(c), q, epoch, comm.transport(), cfg, exec)?;
            Ok(GateStats { case, exchange: Some(ex) })
        }
        BoundCase::ControlledRemoteBoth => {
            let exchange = if layout.rank_bit(c) {
                Some(run_exchange(state, t, Selection::All, q, epoch, comm.transport(), cfg, exec)?)
            } else {
                None
            };
            Ok(GateStats { case, exchange })
        }
        BoundCase::SingleLocal | BoundCase::SingleRemote => unreachable!("controlled gate"),
    }
}

/// Apply any gate, choosing the local kernel or the exchange protocol.
pub fn apply_gate<T: Transport, X: Executor>(
    state: &mut LocalState,
    gate: &GateOp,
    comm: &mut Comm<'_, T>,
    cfg: &ExchangeConfig,
    exec: &X,
) -> Result<GateStats> {
    match *gate {
        GateOp::Single { target, ref matrix } => {
            if state.layout().is_local(target) {
                comm.check_layout(state.layout())?;
                kernels::apply_single_local(state, target, matrix, exec)?;
                Ok(GateStats::local(BoundCase::SingleLocal))
            } else {
                apply_single_distributed(state, target, matrix, comm, cfg, exec)
            }
        }
        GateOp::Controlled { control, target, ref matrix } => {
            apply_controlled_distributed(state, control, target, matrix, comm, cfg, exec)
        }
    }
}

/// Default memory guard for [`gather_full_state`].
pub const DEFAULT_GATHER_CAP: usize = 26;

/// Concatenate every rank's slice, in rank order, on rank 0. Other ranks
/// get `None`.
pub fn gather_full_state<T: Transport>(
    state: &LocalState,
    comm: &mut Comm<'_, T>,
    cap_qubits: usize,
) -> Result<Option<Vec<Amplitude>>> {
    let layout = *state.layout();
    comm.check_layout(&layout)?;
    if layout.qubits() > cap_qubits {
        return Err(Error::TooLarge {
            what: "gather",
            required: layout.qubits(),
            cap: cap_qubits,
        });
    }
    let tag = Tag::new(comm.next_epoch(), 0);
    let t = comm.transport();
    if layout.rank() != 0 {
        t.send(0, tag, encode_amps(state.amps()))?;
        return Ok(None);
    }
    let mut full = Vec::with_capacity(1 << layout.qubits());
    full.extend_from_slice(state.amps());
    let mut chunk = vec![Amplitude::new(0.0, 0.0); layout.local_len()];
    for r in 1..layout.ranks() {
        decode_amps_into(&t.recv(r, tag)?, &mut chunk)?;
        full.extend_from_slice(&chunk);
    }
    Ok(Some(full))
}

/// Sum one value per rank, in rank order, and give every rank the result.
pub fn allreduce_sum<T: Transport>(value: f64, comm: &mut Comm<'_, T>) -> Result<f64> {
    let size = comm.size();
    if size == 1 {
        return Ok(value);
    }
    let epoch = comm.next_epoch();
    let (up, down) = (Tag::new(epoch, 0), Tag::new(epoch, 1));
    let t = comm.transport();
    let decode = |b: Vec<u8>| -> Result<f64> {
        let arr: [u8; 8] = b.as_slice().try_into().map_err(|_| TransportError::Length {
            got: b.len(),
            expected: 8,
        })?;
        Ok(f64::from_le_bytes(arr))
    };
    if comm.rank() == 0 {
        let mut total = value;
        for r in 1..size {
            total += decode(t.recv(r, up)?)?;
        }
        for r in 1..size {
            t.send(r, down, total.to_le_bytes().to_vec())?;
        }
        Ok(total)
    } else {
        t.send(0, up, value.to_le_bytes().to_vec())?;
        decode(t.recv(0, down)?)
    }
}

/// Σ|α|² across all ranks.
pub fn global_norm_sq<T: Transport>(state: &LocalState, comm: &mut Comm<'_, T>) -> Result<f64> {
    comm.check_layout(state.layout())?;
    allreduce_sum(state.local_norm_sq(), comm)
}

/// Probability that `qubit` reads 1, across all ranks.
pub fn probability_of_bit<T: Transport>(state: &LocalState, qubit: usize, comm: &mut Comm<'_, T>) -> Result<f64> {
    comm.check_layout(state.layout())?;
    let local = state.local_prob_one(qubit)?;
    allreduce_sum(local, comm)
}
