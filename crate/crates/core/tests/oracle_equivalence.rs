use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svsim_core::circuit::random_unitary;
use svsim_core::kernels::{apply_block_serial, apply_controlled_local, apply_single_local};
use svsim_core::oracle::{full_controlled_unitary, full_single_unitary};
use svsim_core::{Amplitude, GateMatrix, GateOp, Layout, LocalState, Serial};

fn max_abs(a: &[Amplitude], b: &[Amplitude]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn basis_vec(n: usize, i: usize) -> Vec<Amplitude> {
    let mut v = vec![Amplitude::new(0.0, 0.0); 1 << n];
    v[i] = Amplitude::new(1.0, 0.0);
    v
}

#[test]
fn single_qubit_kernel_matches_dense_n6_exhaustive() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let q = random_unitary(&mut rng);
        for k in 0..n {
            let u = full_single_unitary(n, k, &q).unwrap();
            for b in 0..1usize << n {
                let mut s = LocalState::basis(Layout::single(n).unwrap(), b as u64).unwrap();
                apply_single_local(&mut s, k, &q, &Serial).unwrap();
                worst = worst.max(max_abs(s.amps(), &u.matvec(&basis_vec(n, b))));
            }
        }
    }
    assert!(worst <= 1e-13, "max-abs {worst:e}");
}

#[test]
fn controlled_kernel_matches_dense_n6_exhaustive() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let q = random_unitary(&mut rng);
        for c in 0..n {
            for t in (0..n).filter(|&t| t != c) {
                let u = full_controlled_unitary(n, c, t, &q).unwrap();
                for b in 0..1usize << n {
                    let mut s = LocalState::basis(Layout::single(n).unwrap(), b as u64).unwrap();
                    apply_controlled_local(&mut s, c, t, &q, &Serial).unwrap();
                    worst = worst.max(max_abs(s.amps(), &u.matvec(&basis_vec(n, b))));
                }
            }
        }
    }
    assert!(worst <= 1e-13, "max-abs {worst:e}");
}

#[test]
fn random_gate_at_n10_matches_dense() {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let l = Layout::single(n).unwrap();
    let amps: Vec<_> = (0..1 << n)
        .map(|i| Amplitude::new(((i * 7) % 13) as f64 - 6.0, ((i * 3) % 5) as f64 - 2.0))
        .collect();
    for trial in 0..6 {
        let q = random_unitary(&mut rng);
        let k = trial % n;
        let c = (k + 1 + (trial * 3) % (n - 1)) % n;
        let mut s = LocalState::from_amps(l, &amps).unwrap();
        apply_single_local(&mut s, k, &q, &Serial).unwrap();
        let want = full_single_unitary(n, k, &q).unwrap().matvec(&amps);
        assert!(max_abs(s.amps(), &want) <= 1e-12);
        let mut s = LocalState::from_amps(l, &amps).unwrap();
        apply_controlled_local(&mut s, c, k, &q, &Serial).unwrap();
        let want = full_controlled_unitary(n, c, k, &q).unwrap().matvec(&amps);
        assert!(max_abs(s.amps(), &want) <= 1e-12);
    }
}

#[test]
fn block_matches_sequential_kernels() {
    let b = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let gates: Vec<GateOp> = (0..6)
        .map(|i| {
            let q = random_unitary(&mut rng);
            if i % 2 == 0 {
                GateOp::single((i * 3) % b, q)
            } else {
                GateOp::controlled((i * 5) % b, (i * 5 + 2) % b, q)
            }
        })
        .collect();
    let l = Layout::single(b).unwrap();
    let mut seq = LocalState::basis(l, 0).unwrap();
    apply_single_local(&mut seq, 0, &GateMatrix::h(), &Serial).unwrap();
    apply_single_local(&mut seq, 5, &GateMatrix::h(), &Serial).unwrap();
    let mut block = seq.amps().to_vec();
    for g in &gates {
        match *g {
            GateOp::Single { target, matrix } => apply_single_local(&mut seq, target, &matrix, &Serial),
            GateOp::Controlled { control, target, matrix } => {
                apply_controlled_local(&mut seq, control, target, &matrix, &Serial)
            }
        }
        .unwrap();
    }
    apply_block_serial(&mut block, 0, &gates).unwrap();
    assert!(max_abs(&block, seq.amps()) <= 1e-14);
}
