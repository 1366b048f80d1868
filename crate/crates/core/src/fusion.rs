//! Gate fusion: run consecutive low-target gates block by block so each
//! `2^l_c`-amplitude block stays cache resident while all of them apply.
//!
//! A gate is fusable when its target is below `l_c`. A control below `l_c`
//! varies inside the block and is handled by the block kernel; a control at
//! or above `l_c` is constant over each block and read from the block's
//! global index.

use alloc::vec::Vec;

use crate::circuit::{Circuit, GateOp};
use crate::distributed::{apply_gate, Comm, ExchangeConfig, GateStats, Transport};
use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::kernels;
use crate::perfmodel::BoundCase;
use crate::state::LocalState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionConfig {
    /// Block exponent `l_c`: blocks hold `2^l_c` amplitudes.
    pub block_bits: usize,
    pub enabled: bool,
}

impl FusionConfig {
    pub fn new(block_bits: usize) -> Self {
        Self {
            block_bits,
            enabled: true,
        }
    }

    pub fn disabled() -> Self {
        Self {
            block_bits: 0,
            enabled: false,
        }
    }

    /// Largest `l_c` whose block occupies at most half of `llc_bytes`.
    pub fn for_cache(llc_bytes: usize) -> Self {
        let half = (llc_bytes / 2).max(32);
        let amps = half / 16;
        Self::new((usize::BITS - 1 - amps.leading_zeros()) as usize)
    }

    pub fn block_bytes(&self) -> usize {
        16usize << self.block_bits
    }

    pub fn fusable(&self, gate: &GateOp) -> bool {
        self.enabled && self.block_bits > 0 && gate.target() < self.block_bits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    FusedBlockRun(Vec<GateOp>),
    PassThrough(GateOp),
}

impl Segment {
    pub fn gates(&self) -> &[GateOp] {
        match self {
            Self::FusedBlockRun(g) => g,
            Self::PassThrough(g) => core::slice::from_ref(g),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionPlan {
    pub config: FusionConfig,
    pub segments: Vec<Segment>,
}

impl FusionPlan {
    /// The gates of every segment, in order.
    pub fn flatten(&self) -> impl Iterator<Item = &GateOp> {
        self.segments.iter().flat_map(|s| s.gates())
    }

    pub fn fused_runs(&self) -> impl Iterator<Item = &[GateOp]> {
        self.segments.iter().filter_map(|s| match s {
            Segment::FusedBlockRun(g) => Some(g.as_slice()),
            Segment::PassThrough(_) => None,
        })
    }
}

/// Greedy grouping in circuit order: a fusable gate extends the current
/// run; any other gate closes it and passes through on its own.
pub fn plan_fusion(circuit: &Circuit, config: FusionConfig) -> FusionPlan {
    let mut segments = Vec::new();
    let mut run: Vec<GateOp> = Vec::new();
    for g in circuit.gates() {
        if config.fusable(g) {
            run.push(*g);
        } else {
            if !run.is_empty() {
                segments.push(Segment::FusedBlockRun(core::mem::take(&mut run)));
            }
            segments.push(Segment::PassThrough(*g));
        }
    }
    if !run.is_empty() {
        segments.push(Segment::FusedBlockRun(run));
    }
    FusionPlan { config, segments }
}

/// Apply a fused run: blocks outermost, gates in order inside each block.
/// Blocks are independent and split across the executor's threads.
pub fn execute_fused_run<X: Executor>(
    state: &mut LocalState,
    gates: &[GateOp],
    block_bits: usize,
    exec: &X,
) -> Result<()> {
    state.ensure_intact()?;
    let layout = *state.layout();
    if block_bits == 0 || block_bits > layout.local_qubits() {
        return Err(Error::Argument("block exponent must be in 1..=m"));
    }
    kernels::check_block_gates(gates, block_bits)?;
    let block = 1usize << block_bits;
    let base = layout.global_base();
    let threads = exec.policy().num_threads;
    let amps = state.amps_mut();
    if threads <= 1 {
        for (i, b) in amps.chunks_exact_mut(block).enumerate() {
            kernels::block_gates(b, base + (i * block) as u64, gates, &Serial);
        }
        return Ok(());
    }
    let blocks = amps.len() / block;
    let per = blocks.div_ceil(threads).max(1);
    let tasks: Vec<_> = amps.chunks_mut(per * block).enumerate().collect();
    exec.run(tasks, |(ti, region)| {
        for (i, b) in region.chunks_exact_mut(block).enumerate() {
            let global = base + ((ti * per + i) * block) as u64;
            kernels::block_gates(b, global, gates, &Serial);
        }
    });
    Ok(())
}

/// Execute one segment, returning per-gate accounting.
pub fn execute_segment<T: Transport, X: Executor>(
    state: &mut LocalState,
    segment: &Segment,
    block_bits: usize,
    comm: &mut Comm<'_, T>,
    cfg: &ExchangeConfig,
    exec: &X,
) -> Result<Vec<GateStats>> {
    match segment {
        Segment::FusedBlockRun(gates) => {
            execute_fused_run(state, gates, block_bits, exec)?;
            let m = state.layout().local_qubits();
            Ok(gates
                .iter()
                .map(|g| GateStats {
                    case: BoundCase::classify(g, m),
                    exchange: None,
                })
                .collect())
        }
        Segment::PassThrough(g) => Ok(alloc::vec![apply_gate(state, g, comm, cfg, exec)?]),
    }
}

/// Run a whole plan. Requires `l_c <= m` when the plan has fused runs.
pub fn execute_plan<T: Transport, X: Executor>(
    state: &mut LocalState,
    plan: &FusionPlan,
    comm: &mut Comm<'_, T>,
    cfg: &ExchangeConfig,
    exec: &X,
) -> Result<Vec<GateStats>> {
    let mut out = Vec::new();
    for seg in &plan.segments {
        out.extend(execute_segment(state, seg, plan.config.block_bits, comm, cfg, exec)?);
    }
    Ok(out)
}
