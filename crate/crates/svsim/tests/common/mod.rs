#![allow(dead_code)]

use std::thread;
use std::time::Duration;

use svsim::transport::{in_process_cluster, Counting, Counts, InProcOptions};
use svsim::Pool;
use svsim_core::distributed::{gather_full_state, GateStats};
use svsim_core::fusion::execute_segment;
use svsim_core::{
    plan_fusion, Amplitude, Circuit, Comm, ExchangeConfig, FusionConfig, Layout, LocalState, ParallelLevel,
    ThreadPolicy,
};

#[derive(Clone, Copy)]
pub struct SimOptions {
    pub ranks: usize,
    pub exchange: ExchangeConfig,
    pub fusion: FusionConfig,
    pub threads: usize,
    pub level: ParallelLevel,
    pub latency: Option<Duration>,
    pub basis: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            ranks: 1,
            exchange: ExchangeConfig::default(),
            fusion: FusionConfig::disabled(),
            threads: 1,
            level: ParallelLevel::Auto,
            latency: None,
            basis: 0,
        }
    }
}

/// What one rank saw: a stats entry per gate and wire counts per segment.
#[derive(Default)]
pub struct RankTrace {
    pub stats: Vec<GateStats>,
    pub segment_counts: Vec<Counts>,
}

pub struct Sim {
    pub state: Vec<Amplitude>,
    pub traces: Vec<RankTrace>,
}

pub fn simulate(circuit: &Circuit, opts: SimOptions) -> Sim {
    let n = circuit.qubits();
    let cluster = in_process_cluster(
        opts.ranks,
        InProcOptions {
            timeout: Duration::from_secs(60),
            link_latency: opts.latency,
        },
    );
    let plan = plan_fusion(circuit, opts.fusion);
    let results: Vec<(Option<Vec<Amplitude>>, RankTrace)> = thread::scope(|s| {
        let handles: Vec<_> = cluster
            .into_iter()
            .map(|t| {
                let plan = &plan;
                s.spawn(move || {
                    let t = Counting::new(t);
                    let layout = Layout::for_ranks(n, opts.ranks, svsim_core::Transport::rank(&t)).unwrap();
                    let mut state = LocalState::basis(layout, opts.basis).unwrap();
                    let pool = Pool::new(ThreadPolicy::new(opts.threads, opts.level));
                    let mut comm = Comm::new(&t);
                    let mut trace = RankTrace::default();
                    for seg in &plan.segments {
                        let stats =
                            execute_segment(&mut state, seg, opts.fusion.block_bits, &mut comm, &opts.exchange, &pool)
                                .unwrap();
                        trace.stats.extend(stats);
                        trace.segment_counts.push(t.take_counts());
                    }
                    let full = gather_full_state(&state, &mut comm, 26).unwrap();
                    (full, trace)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut state = None;
    let mut traces = Vec::new();
    for (full, trace) in results {
        if full.is_some() {
            state = full;
        }
        traces.push(trace);
    }
    Sim {
        state: state.expect("rank 0 gathers"),
        traces,
    }
}

pub fn max_abs_diff(a: &[Amplitude], b: &[Amplitude]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn bitwise_equal(a: &[Amplitude], b: &[Amplitude]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}

/// Median over `reps` of the slowest rank's time for one single-qubit gate
/// on the top qubit, with `chunk` amplitudes per exchange step.
pub fn time_remote_gate(n: usize, ranks: usize, chunk: usize, latency: Option<Duration>, reps: usize) -> f64 {
    use svsim_core::distributed::apply_gate;
    use svsim_core::{GateMatrix, GateOp, Transport};
    let cluster = in_process_cluster(
        ranks,
        InProcOptions {
            timeout: Duration::from_secs(60),
            link_latency: latency,
        },
    );
    let gate = GateOp::single(n - 1, GateMatrix::h());
    let exchange = ExchangeConfig::with_chunk_amps(chunk);
    let per_rank: Vec<Vec<f64>> = thread::scope(|s| {
        let hs: Vec<_> = cluster
            .into_iter()
            .map(|t| {
                s.spawn(move || {
                    let layout = Layout::for_ranks(n, ranks, t.rank()).unwrap();
                    let mut state = LocalState::basis(layout, 0).unwrap();
                    let pool = Pool::new(ThreadPolicy::serial());
                    let mut comm = Comm::new(&t);
                    apply_gate(&mut state, &gate, &mut comm, &exchange, &pool).unwrap();
                    (0..reps)
                        .map(|_| {
                            t.barrier().unwrap();
                            let start = std::time::Instant::now();
                            apply_gate(&mut state, &gate, &mut comm, &exchange, &pool).unwrap();
                            start.elapsed().as_secs_f64()
                        })
                        .collect()
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut worst: Vec<f64> = (0..reps)
        .map(|i| per_rank.iter().map(|r| r[i]).fold(0.0, f64::max))
        .collect();
    worst.sort_by(f64::total_cmp);
    worst[reps / 2]
}
