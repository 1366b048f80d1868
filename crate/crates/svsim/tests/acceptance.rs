//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{bitwise_equal, max_abs_diff, simulate, time_remote_gate, SimOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svsim::bench::{bounds_table, run_bandwidth};
use svsim::probe;
use svsim::runner::{run_inproc, FusionSetting, RunConfig};
use svsim_core::circuit::{fourier_gate_count, random_unitary};
use svsim_core::kernels::{apply_controlled_local, apply_single_local};
use svsim_core::oracle::{full_controlled_unitary, full_single_unitary};
use svsim_core::{
    build_iqft, build_qft, random_circuit, Amplitude, BoundCase, Circuit, ExchangeConfig, FusionConfig, GateMatrix,
    GateOp, Layout, LocalState, MachineParams, Serial,
};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Result<String, String>) {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reference_bounds() -> Result<String, String> {
    let params = MachineParams::new(40e9, 5.5e9, 1 << 25).map_err(|e| e.to_string())?;
    let t = bounds_table(29..=29, &params).map_err(|e| e.to_string())?;
    let want = [0.43, 3.12, 0.21, 0.43, 1.56, 3.12];
    let got: Vec<f64> = (1..=6).map(|i| t.rows[0][i].as_f64().unwrap()).collect();
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        ensure((g - w).abs() <= 0.005, || format!("case {} = {g:.4}, expected {w}", i + 1))?;
    }
    let shown: Vec<String> = got.iter().map(|g| format!("{g:.2}")).collect();
    Ok(format!("m=29 cases 1-6 = {} s", shown.join(", ")))
}

fn fourier_gate_counts() -> Result<String, String> {
    for n in 29..=40 {
        let want = n * (n + 1) / 2;
        let (q, iq) = (build_qft(n).len(), build_iqft(n).len());
        ensure(q == want && iq == want && fourier_gate_count(n) == want, || {
            format!("n={n}: qft {q}, iqft {iq}, expected {want}")
        })?;
    }
    ensure(build_qft(29).len() == 435 && build_qft(40).len() == 820, || "endpoints".into())?;
    Ok("n=29..40 gate counts 435..820 exact".into())
}

fn oracle_equivalence() -> Result<String, String> {
    let n = 6;
    let dim = 1usize << n;
    let layout = Layout::single(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6);
    let mut worst = 0.0f64;
    let mut checks = 0usize;
    for _ in 0..20 {
        let q = random_unitary(&mut rng);
        let mut gates: Vec<GateOp> = (0..n).map(|k| GateOp::single(k, q)).collect();
        for c in 0..n {
            for t in (0..n).filter(|&t| t != c) {
                gates.push(GateOp::controlled(c, t, q));
            }
        }
        for g in &gates {
            let u = match g.control() {
                None => full_single_unitary(n, g.target(), &q),
                Some(c) => full_controlled_unitary(n, c, g.target(), &q),
            }
            .map_err(|e| e.to_string())?;
            for b in 0..dim {
                let mut s = LocalState::basis(layout, b as u64).unwrap();
                match g.control() {
                    None => apply_single_local(&mut s, g.target(), &q, &Serial),
                    Some(c) => apply_controlled_local(&mut s, c, g.target(), &q, &Serial),
                }
                .map_err(|e| e.to_string())?;
                for (r, a) in s.amps().iter().enumerate() {
                    worst = worst.max((a - u.get(r, b)).norm());
                }
                checks += 1;
            }
        }
    }
    ensure(worst <= 1e-13, || format!("max-abs {worst:e} > 1e-13"))?;
    Ok(format!("{checks} kernel runs, max-abs {worst:.1e}"))
}

/// Distributed equivalence and traffic accounting share one sweep.
fn distributed_sweep() -> (Result<String, String>, Result<String, String>) {
    let mut worst = 0.0f64;
    let mut runs = 0;
    let mut gates_checked = 0u64;
    let mut traffic_err: Option<String> = None;
    for n in [8usize, 10, 12] {
        for i in 0..50u64 {
            let c = random_circuit(n, 100, 1_000 * n as u64 + i);
            let want = simulate(&c, SimOptions::default()).state;
            for p in 1..=3usize {
                let sim = simulate(&c, SimOptions { ranks: 1 << p, ..Default::default() });
                worst = worst.max(max_abs_diff(&sim.state, &want));
                runs += 1;
                let m = n - p;
                for (rank, tr) in sim.traces.iter().enumerate() {
                    for (gi, (st, cnt)) in tr.stats.iter().zip(&tr.segment_counts).enumerate() {
                        let g = &c.gates()[gi];
                        let participates = match g.control() {
                            Some(ctl) if ctl >= m => rank >> (ctl - m) & 1 == 1,
                            _ => true,
                        };
                        let expected = match st.case {
                            BoundCase::SingleRemote | BoundCase::ControlledRemoteTarget => st.case.traffic_bytes(m),
                            BoundCase::ControlledRemoteBoth if participates => st.case.traffic_bytes(m),
                            _ => 0,
                        };
                        if expected > 0 {
                            gates_checked += 1;
                        }
                        if cnt.total() != expected && traffic_err.is_none() {
                            traffic_err = Some(format!(
                                "n={n} p={p} rank={rank} gate={gi} {:?}: {} bytes, expected {expected}",
                                st.case,
                                cnt.total()
                            ));
                        }
                    }
                }
            }
        }
    }
    let eq = if worst <= 1e-12 {
        Ok(format!("{runs} distributed runs vs single rank, max-abs {worst:.1e}"))
    } else {
        Err(format!("max-abs {worst:e} > 1e-12"))
    };
    let traffic = match traffic_err {
        None => Ok(format!("{gates_checked} rank-gate exchanges: counted bytes == 2^(m+5) / 2^(m+4) exactly")),
        Some(e) => Err(e),
    };
    (eq, traffic)
}

fn chunking() -> Result<String, String> {
    let (n, ranks) = (12, 4);
    let half = 1usize << (n - 2 - 1);
    for seed in 0..10 {
        let c = random_circuit(n, 100, 77_000 + seed);
        let base = simulate(&c, SimOptions { ranks, exchange: ExchangeConfig::with_chunk_amps(half), ..Default::default() });
        for div in [2, 4, 8] {
            let chunk = half / div;
            let sim = simulate(&c, SimOptions { ranks, exchange: ExchangeConfig::with_chunk_amps(chunk), ..Default::default() });
            ensure(bitwise_equal(&sim.state, &base.state), || format!("seed {seed}: chunk half/{div} differs"))?;
            for tr in &sim.traces {
                for ex in tr.stats.iter().filter_map(|s| s.exchange) {
                    ensure(ex.temp_high_water_bytes <= 2 * chunk * 16, || {
                        format!("scratch {} B > 2*chunk*16", ex.temp_high_water_bytes)
                    })?;
                }
            }
        }
    }
    Ok("10 circuits, chunks {half, 1/2, 1/4, 1/8}: bitwise identical; scratch <= 2*chunk*16 B".into())
}

fn fusion() -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut count = 0;
    for lc in [4usize, 8, 10] {
        for n in [10usize, 13, 16] {
            let c = build_iqft(n);
            let plain = simulate(&c, SimOptions { basis: 5, ..Default::default() }).state;
            let fused = simulate(&c, SimOptions { basis: 5, fusion: FusionConfig::new(lc), ..Default::default() }).state;
            worst = worst.max(max_abs_diff(&fused, &plain));
            count += 1;
        }
        for i in 0..100u64 {
            let n = rng.random_range(lc.max(6)..=16);
            let c = random_circuit(n, 150, 90_000 + 1000 * lc as u64 + i);
            let plain = simulate(&c, SimOptions::default()).state;
            let fused = simulate(&c, SimOptions { fusion: FusionConfig::new(lc), ..Default::default() }).state;
            worst = worst.max(max_abs_diff(&fused, &plain));
            count += 1;
        }
    }
    ensure(worst <= 1e-13, || format!("max-abs {worst:e} > 1e-13"))?;
    Ok(format!("{count} fused/unfused pairs (l_c in 4,8,10), max-abs {worst:.1e}"))
}

fn reverse_bits(x: usize, n: usize) -> usize {
    x.reverse_bits() >> (usize::BITS as usize - n)
}

fn qft() -> Result<String, String> {
    let n = 10;
    let dim = 1usize << n;
    let c = build_qft(n);
    let scale = 1.0 / (dim as f64).sqrt();
    let mut worst = 0.0f64;
    for x in 0..dim {
        let got = simulate(&c, SimOptions { basis: x as u64, ..Default::default() }).state;
        for (j, a) in got.iter().enumerate() {
            let k = reverse_bits(j, n);
            let r = (x * k) % dim;
            let want = Amplitude::from_polar(scale, 2.0 * PI * r as f64 / dim as f64);
            worst = worst.max((a - want).norm());
        }
    }
    ensure(worst <= 1e-12, || format!("QFT(10) vs DFT sum: {worst:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut rt = 0.0f64;
    for n in [2usize, 5, 8, 12, 16, 20] {
        let round = build_qft(n).then(&build_iqft(n)).map_err(|e| e.to_string())?;
        for _ in 0..2 {
            let b = rng.random_range(0..1u64 << n);
            let s = simulate(&round, SimOptions { basis: b, ..Default::default() }).state;
            for (i, a) in s.iter().enumerate() {
                let want = if i as u64 == b { 1.0 } else { 0.0 };
                rt = rt.max((a - Amplitude::new(want, 0.0)).norm());
            }
        }
    }
    ensure(rt <= 1e-10, || format!("round trip error {rt:e}"))?;
    Ok(format!("QFT(10) all 1024 inputs max-abs {worst:.1e}; QFT->IQFT n<=20 max-abs {rt:.1e}"))
}

fn normalization() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (seed, ranks) in [(1u64, 1usize), (2, 4)] {
        let c = random_circuit(20, 1000, 31_337 + seed);
        let cfg = RunConfig {
            ranks,
            ..RunConfig::default()
        };
        let out = run_inproc(&c, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((1.0 - out.summary.unwrap().norm).abs());
    }
    ensure(worst <= 1e-10, || format!("|1 - norm| = {worst:e}"))?;
    Ok(format!("two 1000-gate circuits at n=20, |1 - norm| <= {worst:.1e}"))
}

fn best_run(c: &Circuit, cfg: &RunConfig, reps: usize) -> Result<f64, String> {
    let mut best = 0.0f64;
    for _ in 0..reps {
        let out = run_inproc(c, cfg).map_err(|e| e.to_string())?;
        best = best.max(run_bandwidth(&out.records, out.seconds).map_err(|e| e.to_string())?);
    }
    Ok(best)
}

fn performance() -> Result<String, String> {
    let base = RunConfig {
        summarize: false,
        llc_bytes: probe::llc_bytes_or_default(),
        ..RunConfig::default()
    };
    // (a) fusion
    let lc = 18;
    let c = build_iqft(lc + 3);
    let fused = best_run(&c, &RunConfig { fusion: FusionSetting::Bits(lc), ..base.clone() }, 3)?;
    let unfused = best_run(&c, &RunConfig { fusion: FusionSetting::Off, ..base.clone() }, 3)?;
    // (b) in-cache vs out-of-cache bandwidth of a Hadamard sweep
    let small_n = 14;
    let mut big_n = small_n + 1;
    while (16u64 << big_n) < 2 * base.llc_bytes as u64 {
        big_n += 1;
    }
    if base.memory_guard(big_n, 1).is_err() {
        return Err(format!("n={big_n} needed to exceed the cache does not fit in memory"));
    }
    let sweep = |n: usize, rounds: usize| {
        let mut c = Circuit::new(n);
        for _ in 0..rounds {
            for k in 0..n {
                c.push(GateOp::single(k, GateMatrix::h())).unwrap();
            }
        }
        c
    };
    let in_cache = best_run(&sweep(small_n, 20), &base, 3)?;
    let out_cache = best_run(&sweep(big_n, 1), &base, 2)?;
    let detail = format!(
        "fused IQFT({}) {:.2} GB/s vs unfused {:.2} GB/s ({:.2}x); n={small_n} {:.2} GB/s vs n={big_n} {:.2} GB/s ({:.2}x, LLC {} MiB)",
        lc + 3,
        fused / 1e9,
        unfused / 1e9,
        fused / unfused,
        in_cache / 1e9,
        out_cache / 1e9,
        in_cache / out_cache,
        base.llc_bytes >> 20
    );
    ensure(fused >= unfused && in_cache >= out_cache, || detail.clone())?;
    Ok(detail)
}

fn overlap() -> Result<String, String> {
    let (n, ranks, steps) = (18, 2, 8);
    let half = 1usize << (n - 2);
    let chunk = half / steps;
    let t_comp = time_remote_gate(n, ranks, chunk, None, 5);
    let mut parts = vec![format!("T_comp {:.1} ms", t_comp * 1e3)];
    // latencies putting communication below, near and above compute
    for factor in [0.25, 1.0, 4.0] {
        let per_msg = t_comp * factor / (2.0 * steps as f64);
        let latency = Duration::from_secs_f64(per_msg);
        let t_comm = 2.0 * steps as f64 * latency.as_secs_f64();
        let fill = 2.0 * latency.as_secs_f64() + t_comp / steps as f64;
        let measured = time_remote_gate(n, ranks, chunk, Some(latency), 5);
        let bound = 1.2 * t_comp.max(t_comm) + fill;
        parts.push(format!(
            "T_comm {:.1} ms -> {:.1} ms (bound {:.1} ms)",
            t_comm * 1e3,
            measured * 1e3,
            bound * 1e3
        ));
        ensure(measured <= bound, || parts.join("; "))?;
    }
    Ok(parts.join("; "))
}

fn main() {
    let mut r = Report { failures: 0 };
    r.check("reference_bounds_m29", reference_bounds);
    r.check("fourier_gate_counts", fourier_gate_counts);
    r.check("oracle_equivalence_n6", oracle_equivalence);
    let mut traffic = None;
    r.check("distributed_equivalence", || {
        let (eq, t) = distributed_sweep();
        traffic = Some(t);
        eq
    });
    r.check("traffic_accounting", || traffic.expect("sweep ran"));
    r.check("chunking_transparency", chunking);
    r.check("fusion_transparency", fusion);
    r.check("qft_correctness", qft);
    r.check("normalization_n20", normalization);
    r.check("performance_direction", performance);
    r.check("overlap", overlap);
    if r.failures > 0 {
        println!("{} criteria failed", r.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
