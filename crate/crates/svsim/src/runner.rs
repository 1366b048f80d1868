//! Executes a circuit across ranks and summarises the final state.

use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::Serialize;
use svsim_core::distributed::{gather_full_state, global_norm_sq, probability_of_bit, DEFAULT_SATURATION_FLOOR};
use svsim_core::fusion::execute_segment;
use svsim_core::{
    plan_fusion, Amplitude, Circuit, Comm, ExchangeConfig, FusionConfig, FusionPlan, Layout, LocalState,
    ParallelLevel, Segment, ThreadPolicy, Transport, TransportError,
};
use thiserror::Error;

use crate::circuit_file::ParseError;
use crate::pool::Pool;
use crate::probe;
use crate::report::GateRecord;
use crate::transport::{in_process_cluster, InProcOptions, PeerError, DEFAULT_TIMEOUT};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("refusing to run: needs {required} bytes but the limit is {limit} bytes ({fraction} of {available} available)")]
    Resource {
        required: u64,
        limit: u64,
        available: u64,
        fraction: f64,
    },
    #[error("transport: {0}")]
    Transport(TransportError),
    #[error("peer list: {0}")]
    Peers(#[from] PeerError),
    #[error(transparent)]
    Sim(svsim_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<svsim_core::Error> for RunError {
    fn from(e: svsim_core::Error) -> Self {
        match e {
            svsim_core::Error::Transport(t) => RunError::Transport(t),
            other => RunError::Sim(other),
        }
    }
}

impl From<TransportError> for RunError {
    fn from(e: TransportError) -> Self {
        RunError::Transport(e)
    }
}

impl RunError {
    /// Process exit status: 2 usage, 3 parse, 4 resource, 5 transport.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Io(_) => 2,
            RunError::Parse(_) => 3,
            RunError::Resource { .. } => 4,
            RunError::Transport(_) | RunError::Peers(_) => 5,
            RunError::Sim(svsim_core::Error::TooLarge { .. }) => 4,
            RunError::Sim(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionSetting {
    Off,
    /// Block sized to half of the last-level cache.
    Auto,
    Bits(usize),
}

impl std::str::FromStr for FusionSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" => Ok(Self::Off),
            "auto" => Ok(Self::Auto),
            _ => s
                .parse::<usize>()
                .map(Self::Bits)
                .map_err(|_| format!("expected a block exponent, `auto` or `off`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub ranks: usize,
    pub threads: usize,
    pub parallel_level: ParallelLevel,
    pub fusion: FusionSetting,
    /// Exchange chunk size in bytes; `None` keeps the default.
    pub chunk_bytes: Option<usize>,
    pub mem_fraction: f64,
    pub llc_bytes: usize,
    pub timeout: Duration,
    /// Injected per-message delay for in-process links.
    pub link_latency: Option<Duration>,
    /// Compute norm, per-qubit probabilities and top amplitudes at the end.
    pub summarize: bool,
    /// Return the gathered state (only when `n <= SUMMARY_GATHER_QUBITS`).
    pub keep_state: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ranks: 1,
            threads: 1,
            parallel_level: ParallelLevel::Auto,
            fusion: FusionSetting::Off,
            chunk_bytes: None,
            mem_fraction: 0.75,
            llc_bytes: probe::FALLBACK_LLC_BYTES,
            timeout: DEFAULT_TIMEOUT,
            link_latency: None,
            summarize: true,
            keep_state: false,
        }
    }
}

/// Largest state whose amplitudes are gathered for the summary.
pub const SUMMARY_GATHER_QUBITS: usize = 20;
pub const TOP_AMPLITUDES: usize = 8;

impl RunConfig {
    pub fn policy(&self) -> ThreadPolicy {
        ThreadPolicy::new(self.threads.max(1), self.parallel_level)
    }

    pub fn exchange(&self) -> ExchangeConfig {
        ExchangeConfig {
            saturation_floor_bytes: self.chunk_bytes.unwrap_or(DEFAULT_SATURATION_FLOOR),
            chunk_amps: None,
        }
    }

    pub fn layout(&self, n: usize, rank: usize) -> Result<Layout, RunError> {
        if !self.ranks.is_power_of_two() {
            return Err(RunError::Usage(format!("rank count {} is not a power of two", self.ranks)));
        }
        Layout::for_ranks(n, self.ranks, rank).map_err(|e| RunError::Usage(e.to_string()))
    }

    /// Block exponent actually used: clamped to `1..=m`, or `None` if off.
    pub fn fusion_config(&self, m: usize) -> FusionConfig {
        let bits = match self.fusion {
            FusionSetting::Off => return FusionConfig::disabled(),
            FusionSetting::Auto => FusionConfig::for_cache(self.llc_bytes).block_bits,
            FusionSetting::Bits(b) => b,
        };
        let bits = bits.min(m);
        if bits == 0 {
            FusionConfig::disabled()
        } else {
            FusionConfig::new(bits)
        }
    }

    /// Bytes held by `ranks_here` ranks: their slices plus exchange scratch.
    pub fn required_bytes(&self, n: usize, ranks_here: usize) -> u64 {
        let p = self.ranks.trailing_zeros() as usize;
        let m = n.saturating_sub(p).min(100) as u32;
        let slice = 16u128 << m;
        let scratch = if p == 0 {
            0
        } else {
            let floor = self.exchange().saturation_floor_bytes as u128;
            2 * (slice / 2).min(floor.max(16))
        };
        u64::try_from(ranks_here as u128 * (slice + scratch)).unwrap_or(u64::MAX)
    }

    pub fn memory_guard(&self, n: usize, ranks_here: usize) -> Result<(), RunError> {
        let Some(available) = probe::available_memory_bytes() else {
            return Ok(());
        };
        let required = self.required_bytes(n, ranks_here);
        let limit = (available as f64 * self.mem_fraction) as u64;
        if required > limit {
            return Err(RunError::Resource {
                required,
                limit,
                available,
                fraction: self.mem_fraction,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopAmplitude {
    pub index: u64,
    pub re: f64,
    pub im: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub qubits: usize,
    pub ranks: usize,
    pub norm: f64,
    /// Probability that each qubit reads 1.
    pub probabilities: Vec<f64>,
    /// Largest amplitudes by magnitude, ties broken by index. Empty above
    /// [`SUMMARY_GATHER_QUBITS`].
    pub top: Vec<TopAmplitude>,
}

#[derive(Debug, Clone)]
pub struct RankOutcome {
    pub records: Vec<GateRecord>,
    pub seconds: f64,
    pub fusion: FusionConfig,
    /// Set on rank 0 when summarising.
    pub summary: Option<Summary>,
    pub state: Option<Vec<Amplitude>>,
}

pub fn top_amplitudes(amps: &[Amplitude], count: usize) -> Vec<TopAmplitude> {
    let mut idx: Vec<usize> = (0..amps.len()).collect();
    idx.sort_by(|&a, &b| amps[b].norm_sqr().total_cmp(&amps[a].norm_sqr()).then(a.cmp(&b)));
    idx.into_iter()
        .take(count)
        .map(|i| TopAmplitude {
            index: i as u64,
            re: amps[i].re,
            im: amps[i].im,
            probability: amps[i].norm_sqr(),
        })
        .collect()
}

/// This rank's part of a run: start from |0…0⟩, apply `circuit`, then
/// summarise collectively. Every rank must call it with the same arguments.
pub fn run_rank<T: Transport>(circuit: &Circuit, transport: &T, cfg: &RunConfig) -> Result<RankOutcome, RunError> {
    let n = circuit.qubits();
    if transport.size() != cfg.ranks {
        return Err(RunError::Usage(format!(
            "transport has {} ranks, configuration says {}",
            transport.size(),
            cfg.ranks
        )));
    }
    let layout = cfg.layout(n, transport.rank())?;
    let m = layout.local_qubits();
    let fusion = cfg.fusion_config(m);
    let plan: FusionPlan = plan_fusion(circuit, fusion);
    let exchange = cfg.exchange();
    let pool = Pool::new(cfg.policy());
    let mut state = LocalState::basis(layout, 0)?;
    let mut comm = Comm::new(transport);
    debug!("rank {} starting: m={m}, l_c={:?}", layout.rank(), fusion.enabled.then_some(fusion.block_bits));

    transport.barrier()?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(circuit.len());
    for seg in &plan.segments {
        let t = Instant::now();
        let stats = execute_segment(&mut state, seg, fusion.block_bits, &mut comm, &exchange, &pool)?;
        let secs = t.elapsed().as_secs_f64();
        // a fused run's time is shared evenly by its gates
        let each = secs / stats.len().max(1) as f64;
        for (g, s) in seg.gates().iter().zip(&stats) {
            records.push(GateRecord::new(records.len(), g, s.case, m, each, s.wire_bytes()));
        }
    }
    transport.barrier()?;
    let seconds = start.elapsed().as_secs_f64();
    if layout.rank() == 0 {
        let fused = plan.segments.iter().filter(|s| matches!(s, Segment::FusedBlockRun(_))).count();
        info!("{} gates in {seconds:.6} s ({fused} fused runs)", circuit.len());
    }

    let (summary, kept) = if cfg.summarize {
        let norm = global_norm_sq(&state, &mut comm)?;
        let probabilities = (0..n)
            .map(|q| probability_of_bit(&state, q, &mut comm))
            .collect::<Result<Vec<_>, _>>()?;
        let full = if n <= SUMMARY_GATHER_QUBITS {
            gather_full_state(&state, &mut comm, SUMMARY_GATHER_QUBITS)?
        } else {
            None
        };
        let summary = (layout.rank() == 0).then(|| Summary {
            qubits: n,
            ranks: cfg.ranks,
            norm,
            probabilities,
            top: full.as_deref().map_or_else(Vec::new, |a| top_amplitudes(a, TOP_AMPLITUDES)),
        });
        (summary, full.filter(|_| cfg.keep_state))
    } else {
        (None, None)
    };
    Ok(RankOutcome {
        records,
        seconds,
        fusion,
        summary,
        state: kept,
    })
}

/// Run every rank as a thread of this process and return rank 0's outcome.
pub fn run_inproc(circuit: &Circuit, cfg: &RunConfig) -> Result<RankOutcome, RunError> {
    cfg.layout(circuit.qubits(), 0)?;
    cfg.memory_guard(circuit.qubits(), cfg.ranks)?;
    let opts = InProcOptions {
        timeout: cfg.timeout,
        link_latency: cfg.link_latency,
    };
    let transports = in_process_cluster(cfg.ranks, opts);
    let results: Vec<Result<RankOutcome, RunError>> = thread::scope(|s| {
        let handles: Vec<_> = transports
            .into_iter()
            .map(|t| {
                thread::Builder::new()
                    .name(format!("svsim-rank-{}", t.rank()))
                    .spawn_scoped(s, move || run_rank(circuit, &t, cfg))
                    .expect("spawn rank thread")
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("rank thread panicked")).collect()
    });
    // report the root cause: a rank that failed locally, not a peer that timed out waiting for it
    let mut first_transport = None;
    let mut outcome = None;
    for (rank, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) if rank == 0 => outcome = Some(o),
            Ok(_) => {}
            Err(e @ RunError::Transport(_)) => {
                first_transport.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    match (first_transport, outcome) {
        (Some(e), _) => Err(e),
        (None, Some(o)) => Ok(o),
        (None, None) => unreachable!("rank 0 either succeeds or fails"),
    }
}
