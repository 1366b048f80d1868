//! Local gate kernels: single-qubit and controlled updates on a rank's slice.
//!
//! A gate on qubit `k` pairs amplitude `i` (bit `k` clear) with `i + 2^k`.
//! The single-qubit nest walks groups of `2^(k+1)` amplitudes (outer loop)
//! and the `2^k` pairs inside each group (inner loop). A controlled gate adds
//! one loop that skips the half of each `2^(c+1)` span whose control bit is
//! clear; which loop is outermost depends on whether `c > t` or `c < t`.
//!
//! Parallel runs split exactly one of those loops into disjoint pieces, so
//! every amplitude is written by a single task with the same arithmetic as
//! the serial path. Results are bitwise identical for any thread count.

use alloc::vec::Vec;

use crate::circuit::GateOp;
use crate::error::{Error, Result};
use crate::exec::{Executor, ParallelLevel, Serial};
use crate::gate::GateMatrix;
use crate::state::LocalState;
use crate::Amplitude;

/// Inner-loop pieces are rounded to this many amplitudes.
const LANE: usize = 4;

#[inline]
fn update_pairs(lo: &mut [Amplitude], hi: &mut [Amplitude], q: &GateMatrix) {
    for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = q.apply(*a0, *a1);
        *a0 = x;
        *a1 = y;
    }
}

/// `lo` and `hi` start at an offset aligned to `2^(c+1)`; update only pairs
/// whose bit `c` is set.
#[inline]
fn update_pairs_masked(lo: &mut [Amplitude], hi: &mut [Amplitude], c: usize, q: &GateMatrix) {
    let h = 1 << c;
    for (l, u) in lo.chunks_mut(2 * h).zip(hi.chunks_mut(2 * h)) {
        if l.len() > h {
            update_pairs(&mut l[h..], &mut u[h..], q);
        }
    }
}

/// Whole `2^(k+1)` groups.
fn single_groups(region: &mut [Amplitude], k: usize, q: &GateMatrix) {
    let h = 1 << k;
    for g in region.chunks_exact_mut(2 * h) {
        let (lo, hi) = g.split_at_mut(h);
        update_pairs(lo, hi, q);
    }
}

/// `c > t`: whole `2^(c+1)` blocks; only the upper half of each is touched.
fn controlled_high(region: &mut [Amplitude], c: usize, t: usize, q: &GateMatrix) {
    let h = 1 << c;
    for b in region.chunks_exact_mut(2 * h) {
        single_groups(&mut b[h..], t, q);
    }
}

/// `c < t`: whole `2^(t+1)` groups, each pair filtered on bit `c`.
fn controlled_low(region: &mut [Amplitude], c: usize, t: usize, q: &GateMatrix) {
    let h = 1 << t;
    for g in region.chunks_exact_mut(2 * h) {
        let (lo, hi) = g.split_at_mut(h);
        update_pairs_masked(lo, hi, c, q);
    }
}

enum Work<'a> {
    Single(&'a mut [Amplitude]),
    ControlledHigh(&'a mut [Amplitude]),
    ControlledLow(&'a mut [Amplitude]),
    Pairs(&'a mut [Amplitude], &'a mut [Amplitude]),
    MaskedPairs(&'a mut [Amplitude], &'a mut [Amplitude]),
}

fn split_units(region: &mut [Amplitude], unit: usize, parts: usize) -> core::slice::ChunksMut<'_, Amplitude> {
    let units = region.len() / unit;
    let per = units.div_ceil(parts.max(1)).max(1);
    region.chunks_mut(per * unit)
}

fn split_pairs<'a>(
    lo: &'a mut [Amplitude],
    hi: &'a mut [Amplitude],
    parts: usize,
    align: usize,
    masked: bool,
    out: &mut Vec<Work<'a>>,
) {
    let len = lo.len();
    let piece = len.div_ceil(parts.max(1)).next_multiple_of(align).min(len).max(1);
    for (l, h) in lo.chunks_mut(piece).zip(hi.chunks_mut(piece)) {
        out.push(if masked {
            Work::MaskedPairs(l, h)
        } else {
            Work::Pairs(l, h)
        });
    }
}

/// Partition a single-qubit update of a whole region into tasks.
fn plan_single<'a>(region: &'a mut [Amplitude], k: usize, threads: usize, level: ParallelLevel, out: &mut Vec<Work<'a>>) {
    let unit = 2 << k;
    let outer = region.len() / unit;
    match level {
        ParallelLevel::Inner => {
            let parts = threads.div_ceil(outer.max(1));
            for g in region.chunks_exact_mut(unit) {
                let (lo, hi) = g.split_at_mut(unit / 2);
                split_pairs(lo, hi, parts, LANE, false, out);
            }
        }
        _ => out.extend(split_units(region, unit, threads).map(Work::Single)),
    }
}

fn run_work<X: Executor>(exec: &X, tasks: Vec<Work<'_>>, op: Op) {
    exec.run(tasks, move |w| match w {
        Work::Single(r) => single_groups(r, op.target, &op.q),
        Work::ControlledHigh(r) => controlled_high(r, op.control, op.target, &op.q),
        Work::ControlledLow(r) => controlled_low(r, op.control, op.target, &op.q),
        Work::Pairs(lo, hi) => update_pairs(lo, hi, &op.q),
        Work::MaskedPairs(lo, hi) => update_pairs_masked(lo, hi, op.control, &op.q),
    });
}

#[derive(Clone, Copy)]
struct Op {
    control: usize,
    target: usize,
    q: GateMatrix,
}

/// Pair update where `lo[i]` is the first and `hi[i]` the second element.
pub(crate) fn pairs_on<X: Executor>(lo: &mut [Amplitude], hi: &mut [Amplitude], q: &GateMatrix, exec: &X) {
    let threads = exec.policy().num_threads;
    if threads <= 1 {
        update_pairs(lo, hi, q);
        return;
    }
    let mut tasks = Vec::new();
    split_pairs(lo, hi, threads, LANE, false, &mut tasks);
    run_work(exec, tasks, Op { control: 0, target: 0, q: *q });
}

/// Single-qubit update on a power-of-two slice; `k < log2(amps.len())`.
pub(crate) fn single_on_slice<X: Executor>(amps: &mut [Amplitude], k: usize, q: &GateMatrix, exec: &X) {
    let policy = exec.policy();
    if policy.num_threads <= 1 {
        single_groups(amps, k, q);
        return;
    }
    let level = policy.resolve(amps.len() >> (k + 1));
    let mut tasks = Vec::new();
    plan_single(amps, k, policy.num_threads, level, &mut tasks);
    run_work(exec, tasks, Op { control: 0, target: k, q: *q });
}

/// Controlled update on a power-of-two slice; both indices below `log2(len)`.
pub(crate) fn controlled_on_slice<X: Executor>(
    amps: &mut [Amplitude],
    c: usize,
    t: usize,
    q: &GateMatrix,
    exec: &X,
) {
    debug_assert_ne!(c, t);
    let policy = exec.policy();
    let threads = policy.num_threads;
    if threads <= 1 {
        if c > t {
            controlled_high(amps, c, t, q);
        } else {
            controlled_low(amps, c, t, q);
        }
        return;
    }
    let op = Op { control: c, target: t, q: *q };
    let mut tasks = Vec::new();
    if c > t {
        let unit = 2 << c;
        let outer = amps.len() / unit;
        match policy.resolve(outer) {
            ParallelLevel::Inner => {
                let share = threads.div_ceil(outer);
                for b in amps.chunks_exact_mut(unit) {
                    let upper = &mut b[unit / 2..];
                    let groups = upper.len() >> (t + 1);
                    let level = if groups >= share {
                        ParallelLevel::Outer
                    } else {
                        ParallelLevel::Inner
                    };
                    plan_single(upper, t, share, level, &mut tasks);
                }
            }
            _ => tasks.extend(split_units(amps, unit, threads).map(Work::ControlledHigh)),
        }
    } else {
        let unit = 2 << t;
        let outer = amps.len() / unit;
        match policy.resolve(outer) {
            ParallelLevel::Inner => {
                let parts = threads.div_ceil(outer);
                let align = LANE.max(2 << c);
                for g in amps.chunks_exact_mut(unit) {
                    let (lo, hi) = g.split_at_mut(unit / 2);
                    split_pairs(lo, hi, parts, align, true, &mut tasks);
                }
            }
            _ => tasks.extend(split_units(amps, unit, threads).map(Work::ControlledLow)),
        }
    }
    run_work(exec, tasks, op);
}

/// Apply `q` to qubit `k` of a rank's slice; `k` must be a local qubit.
pub fn apply_single_local<X: Executor>(
    state: &mut LocalState,
    k: usize,
    q: &GateMatrix,
    exec: &X,
) -> Result<()> {
    state.ensure_intact()?;
    let layout = *state.layout();
    layout.check_qubit(k)?;
    if !layout.is_local(k) {
        return Err(Error::NotLocal {
            qubit: k,
            local: layout.local_qubits(),
        });
    }
    single_on_slice(state.amps_mut(), k, q, exec);
    Ok(())
}

/// Apply `q` to target `t` where control `c` is set; both must be local.
pub fn apply_controlled_local<X: Executor>(
    state: &mut LocalState,
    c: usize,
    t: usize,
    q: &GateMatrix,
    exec: &X,
) -> Result<()> {
    if c == t {
        return Err(Error::SameQubit(c));
    }
    state.ensure_intact()?;
    let layout = *state.layout();
    layout.check_qubit(c)?;
    layout.check_qubit(t)?;
    for qubit in [c, t] {
        if !layout.is_local(qubit) {
            return Err(Error::NotLocal {
                qubit,
                local: layout.local_qubits(),
            });
        }
    }
    controlled_on_slice(state.amps_mut(), c, t, q, exec);
    Ok(())
}

fn block_bits(len: usize) -> Result<usize> {
    if !len.is_power_of_two() {
        return Err(Error::Argument("block length must be a power of two"));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Apply `gates` in order to a block treated as an independent `b`-qubit
/// state. Every index must be below `b`.
pub fn apply_block<X: Executor>(block: &mut [Amplitude], gates: &[GateOp], exec: &X) -> Result<()> {
    let b = block_bits(block.len())?;
    for g in gates {
        for qubit in g.qubits() {
            if qubit >= b {
                return Err(Error::FusionContract { qubit, block_bits: b });
            }
        }
    }
    apply_block_at(block, 0, gates, exec)
}

/// Apply `gates` to the block whose first amplitude has global index `base`.
///
/// Targets must lie inside the block. A control at or above the block width
/// is constant across the block and is read from `base`.
pub fn apply_block_at<X: Executor>(
    block: &mut [Amplitude],
    base: u64,
    gates: &[GateOp],
    exec: &X,
) -> Result<()> {
    let b = block_bits(block.len())?;
    if base & (block.len() as u64 - 1) != 0 {
        return Err(Error::Argument("block base must be aligned to the block length"));
    }
    check_block_gates(gates, b)?;
    block_gates(block, base, gates, exec);
    Ok(())
}

pub(crate) fn check_block_gates(gates: &[GateOp], b: usize) -> Result<()> {
    for g in gates {
        let t = g.target();
        if t >= b {
            return Err(Error::FusionContract { qubit: t, block_bits: b });
        }
        if g.control() == Some(t) {
            return Err(Error::SameQubit(t));
        }
    }
    Ok(())
}

/// Unchecked body of [`apply_block_at`].
pub(crate) fn block_gates<X: Executor>(block: &mut [Amplitude], base: u64, gates: &[GateOp], exec: &X) {
    let b = block.len().trailing_zeros() as usize;
    for g in gates {
        match *g {
            GateOp::Single { target, ref matrix } => single_on_slice(block, target, matrix, exec),
            GateOp::Controlled { control, target, ref matrix } => {
                if control < b {
                    controlled_on_slice(block, control, target, matrix, exec);
                } else if (base >> control) & 1 == 1 {
                    single_on_slice(block, target, matrix, exec);
                }
            }
        }
    }
}

/// Serial convenience wrapper used by tests and the fusion executor.
pub fn apply_block_serial(block: &mut [Amplitude], base: u64, gates: &[GateOp]) -> Result<()> {
    apply_block_at(block, base, gates, &Serial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{Shuffled, ThreadPolicy};
    use crate::layout::Layout;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    fn basis(n: usize, i: u64) -> LocalState {
        LocalState::basis(Layout::single(n).unwrap(), i).unwrap()
    }

    #[test]
    fn hadamard_on_one_qubit() {
        let mut s = basis(1, 0);
        apply_single_local(&mut s, 0, &GateMatrix::h(), &Serial).unwrap();
        assert!((s.amps()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amps()[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.local_norm_sq() - 1.0).abs() < 1e-15);
        assert!((s.local_prob_one(0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn x_on_qubit_one_uses_stride_two() {
        let mut s = basis(2, 1);
        apply_single_local(&mut s, 1, &GateMatrix::x(), &Serial).unwrap();
        assert_eq!(s.amps()[3], c(1.0, 0.0));
        assert_eq!(s.local_norm_sq(), 1.0);
    }

    #[test]
    fn cnot_truth_table() {
        let mut s = basis(2, 3);
        apply_controlled_local(&mut s, 1, 0, &GateMatrix::x(), &Serial).unwrap();
        assert_eq!(s.amps()[2], c(1.0, 0.0));
        let mut s = basis(2, 1);
        apply_controlled_local(&mut s, 1, 0, &GateMatrix::x(), &Serial).unwrap();
        assert_eq!(s.amps()[1], c(1.0, 0.0));
    }

    #[test]
    fn kernel_errors() {
        let mut s = LocalState::basis(Layout::new(3, 1, 0).unwrap(), 0).unwrap();
        assert!(matches!(
            apply_single_local(&mut s, 2, &GateMatrix::h(), &Serial),
            Err(Error::NotLocal { qubit: 2, local: 2 })
        ));
        assert!(matches!(
            apply_controlled_local(&mut s, 1, 1, &GateMatrix::x(), &Serial),
            Err(Error::SameQubit(1))
        ));
        assert!(matches!(
            apply_controlled_local(&mut s, 2, 0, &GateMatrix::x(), &Serial),
            Err(Error::NotLocal { qubit: 2, .. })
        ));
    }

    #[test]
    fn bell_block() {
        let mut block = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let gates = [
            GateOp::single(0, GateMatrix::h()),
            GateOp::controlled(0, 1, GateMatrix::x()),
        ];
        apply_block(&mut block, &gates, &Serial).unwrap();
        let s = FRAC_1_SQRT_2;
        let want = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        for (a, w) in block.iter().zip(want) {
            assert!((a - w).norm() < 1e-15);
        }
    }

    #[test]
    fn block_contract() {
        let mut block = [c(1.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            apply_block(&mut block, &[GateOp::single(1, GateMatrix::h())], &Serial),
            Err(Error::FusionContract { qubit: 1, block_bits: 1 })
        ));
        // high control is only allowed through apply_block_at
        let g = [GateOp::controlled(3, 0, GateMatrix::x())];
        assert!(apply_block(&mut block, &g, &Serial).is_err());
        apply_block_at(&mut block, 8, &g, &Serial).unwrap();
        assert_eq!(block[1], c(1.0, 0.0));
        apply_block_at(&mut block, 4, &g, &Serial).unwrap();
        assert_eq!(block[1], c(1.0, 0.0));
    }

    fn pseudo_state(n: usize) -> LocalState {
        let amps: Vec<_> = (0..1usize << n)
            .map(|i| c(libm::sin(i as f64 * 0.37), libm::cos(i as f64 * 0.11)))
            .collect();
        LocalState::from_amps(Layout::single(n).unwrap(), &amps).unwrap()
    }

    #[test]
    fn partitioning_is_bitwise_transparent() {
        let n = 7;
        let q = GateMatrix::u3(0.3, 1.2, -0.7);
        let policies = [1, 2, 3, 5, 8, 64, 200]
            .into_iter()
            .flat_map(|t| {
                [ParallelLevel::Outer, ParallelLevel::Inner, ParallelLevel::Auto]
                    .map(|l| ThreadPolicy::new(t, l))
            });
        for policy in policies {
            let ex = Shuffled(policy);
            for k in 0..n {
                let mut a = pseudo_state(n);
                let mut b = a.clone();
                apply_single_local(&mut a, k, &q, &Serial).unwrap();
                apply_single_local(&mut b, k, &q, &ex).unwrap();
                assert_eq!(a, b, "k={k} {policy:?}");
            }
            for cq in 0..n {
                for t in (0..n).filter(|&t| t != cq) {
                    let mut a = pseudo_state(n);
                    let mut b = a.clone();
                    apply_controlled_local(&mut a, cq, t, &q, &Serial).unwrap();
                    apply_controlled_local(&mut b, cq, t, &q, &ex).unwrap();
                    assert_eq!(a, b, "c={cq} t={t} {policy:?}");
                }
            }
        }
    }
}
