//! Gate sweeps, Fourier-transform timing and the analytic bound table.

use std::ops::RangeInclusive;
use std::thread;
use std::time::Instant;

use serde_json::json;
use svsim_core::circuit::fourier_gate_count;
use svsim_core::distributed::apply_gate;
use svsim_core::perfmodel::{achieved_bandwidth, lower_bound_seconds};
use svsim_core::{build_qft, BoundCase, Comm, GateMatrix, GateOp, LocalState, MachineParams, Transport};

use crate::pool::Pool;
use crate::report::{Table, MIN_SECONDS};
use crate::runner::{run_inproc, RunConfig, RunError};
use crate::transport::{in_process_cluster, InProcOptions};

/// Mean seconds per application of `gate`, applied `reps` times to a
/// `2^n` state split over `cfg.ranks` in-process ranks. Rank 0's clock,
/// bracketed by barriers.
pub fn time_gate(n: usize, gate: &GateOp, reps: usize, cfg: &RunConfig) -> Result<(f64, BoundCase), RunError> {
    cfg.layout(n, 0)?;
    gate_in_range(gate, n)?;
    cfg.memory_guard(n, cfg.ranks)?;
    let transports = in_process_cluster(
        cfg.ranks,
        InProcOptions {
            timeout: cfg.timeout,
            link_latency: cfg.link_latency,
        },
    );
    let reps = reps.max(1);
    let results: Vec<Result<(f64, BoundCase), RunError>> = thread::scope(|s| {
        let handles: Vec<_> = transports
            .into_iter()
            .map(|t| {
                s.spawn(move || {
                    let layout = cfg.layout(n, t.rank())?;
                    let mut state = LocalState::basis(layout, 0)?;
                    let pool = Pool::new(cfg.policy());
                    let exchange = cfg.exchange();
                    let mut comm = Comm::new(&t);
                    // warm-up touches every page once
                    let case = apply_gate(&mut state, gate, &mut comm, &exchange, &pool)?.case;
                    t.barrier()?;
                    let start = Instant::now();
                    for _ in 0..reps {
                        apply_gate(&mut state, gate, &mut comm, &exchange, &pool)?;
                    }
                    t.barrier()?;
                    Ok((start.elapsed().as_secs_f64() / reps as f64, case))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("rank thread panicked")).collect()
    });
    let mut out = None;
    for r in results {
        let r = r?;
        out.get_or_insert(r);
    }
    let (secs, case) = out.expect("at least one rank");
    Ok((secs.max(MIN_SECONDS), case))
}

fn gate_in_range(gate: &GateOp, n: usize) -> Result<(), RunError> {
    if gate.max_qubit() >= n {
        return Err(RunError::Usage(format!("qubit {} out of range for n={n}", gate.max_qubit())));
    }
    Ok(())
}

/// One row per target qubit `k`: time of a Hadamard on `k`.
pub fn single_sweep(n: usize, qubits: RangeInclusive<usize>, reps: usize, cfg: &RunConfig) -> Result<Table, RunError> {
    let m = n - cfg.ranks.trailing_zeros() as usize;
    let mut t = Table::new(
        "single_gate_sweep",
        &["k", "case", "network_case", "seconds_per_gate", "bytes_moved", "bandwidth_bytes_per_s"],
    );
    t.meta.insert("qubits".into(), json!(n));
    t.meta.insert("ranks".into(), json!(cfg.ranks));
    for k in qubits {
        let (secs, case) = time_gate(n, &GateOp::single(k, GateMatrix::h()), reps, cfg)?;
        let bytes = case.traffic_bytes(m);
        t.push(vec![
            json!(k),
            json!(case.id()),
            json!(case.uses_network()),
            json!(secs),
            json!(bytes),
            json!(achieved_bandwidth(bytes, secs)?),
        ]);
    }
    Ok(t)
}

/// Every ordered `(c, t)` pair with `c != t`: time of a controlled-X.
pub fn controlled_grid(n: usize, reps: usize, cfg: &RunConfig) -> Result<Table, RunError> {
    let m = n - cfg.ranks.trailing_zeros() as usize;
    let mut t = Table::new(
        "controlled_gate_grid",
        &["c", "t", "case", "network_case", "seconds_per_gate", "bytes_moved"],
    );
    t.meta.insert("qubits".into(), json!(n));
    t.meta.insert("ranks".into(), json!(cfg.ranks));
    for c in 0..n {
        for tq in (0..n).filter(|&x| x != c) {
            let (secs, case) = time_gate(n, &GateOp::controlled(c, tq, GateMatrix::x()), reps, cfg)?;
            t.push(vec![
                json!(c),
                json!(tq),
                json!(case.id()),
                json!(case.uses_network()),
                json!(secs),
                json!(case.traffic_bytes(m)),
            ]);
        }
    }
    Ok(t)
}

/// `{n, ngates, total_s, s_per_gate}` per size. With `dry_run` only the
/// gate counts are filled in.
pub fn qft_bench(sizes: RangeInclusive<usize>, dry_run: bool, cfg: &RunConfig) -> Result<Table, RunError> {
    let mut t = Table::new("qft", &["n", "ngates", "total_s", "s_per_gate"]);
    t.meta.insert("ranks".into(), json!(cfg.ranks));
    t.meta.insert("dry_run".into(), json!(dry_run));
    for n in sizes {
        if dry_run {
            t.push(vec![json!(n), json!(fourier_gate_count(n)), json!(null), json!(null)]);
            continue;
        }
        let circuit = build_qft(n);
        let cfg = RunConfig {
            summarize: false,
            keep_state: false,
            ..cfg.clone()
        };
        let out = run_inproc(&circuit, &cfg)?;
        let total = out.seconds.max(MIN_SECONDS);
        t.push(vec![
            json!(n),
            json!(circuit.len()),
            json!(total),
            json!(total / circuit.len() as f64),
        ]);
    }
    Ok(t)
}

/// Lower-bound seconds per gate for each of the six cases, per `m`.
pub fn bounds_table(ms: RangeInclusive<usize>, params: &MachineParams) -> Result<Table, RunError> {
    let mut cols = vec!["m".to_string()];
    cols.extend(BoundCase::ALL.iter().map(|c| format!("case{}_s", c.id())));
    let mut t = Table {
        name: "bounds".into(),
        columns: cols,
        rows: Vec::new(),
        meta: Default::default(),
    };
    t.meta.insert("mem_bandwidth".into(), json!(params.mem_bandwidth));
    t.meta.insert("net_bandwidth".into(), json!(params.net_bandwidth));
    t.meta.insert(
        "cases".into(),
        json!(BoundCase::ALL.iter().map(|c| c.label()).collect::<Vec<_>>()),
    );
    for m in ms {
        let mut row = vec![json!(m)];
        for case in BoundCase::ALL {
            row.push(json!(lower_bound_seconds(case, m, params)?));
        }
        t.push(row);
    }
    Ok(t)
}

/// Aggregate model traffic over wall time for a finished run.
pub fn run_bandwidth(records: &[crate::report::GateRecord], seconds: f64) -> Result<f64, RunError> {
    let bytes: u64 = records.iter().map(|r| r.bytes_moved).sum();
    Ok(achieved_bandwidth(bytes, seconds.max(MIN_SECONDS))?)
}
