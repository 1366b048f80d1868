//! Dense reference simulator: builds full `2^n × 2^n` unitaries by Kronecker
//! products and applies them by matrix-vector multiplication. Only for small
//! registers; used to check the kernels.

use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{Circuit, GateOp};
use crate::error::{Error, Result};
use crate::gate::GateMatrix;
use crate::Amplitude;

/// Hard cap on oracle register width.
pub const ORACLE_MAX_QUBITS: usize = 12;

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl DenseUnitary {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Amplitude::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    pub fn from_gate(q: &GateMatrix) -> Self {
        Self {
            dim: 2,
            entries: q.to_rows().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    /// `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let dim = self.dim * rhs.dim;
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        entries[(i * rhs.dim + k) * dim + j * rhs.dim + l] = a * rhs.get(k, l);
                    }
                }
            }
        }
        Self { dim, entries }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn matvec(&self, v: &[Amplitude]) -> Vec<Amplitude> {
        (0..self.dim)
            .map(|r| {
                self.entries[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .fold(Amplitude::new(0.0, 0.0), |acc, (a, x)| acc + a * x)
            })
            .collect()
    }

    /// Largest elementwise magnitude of `U†U - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = Amplitude::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - Amplitude::new(want, 0.0)).norm());
            }
        }
        worst
    }
}

fn check_width(n: usize) -> Result<()> {
    if n > ORACLE_MAX_QUBITS {
        return Err(Error::TooLarge {
            what: "dense oracle",
            required: n,
            cap: ORACLE_MAX_QUBITS,
        });
    }
    if n == 0 {
        return Err(Error::Layout("need at least one qubit"));
    }
    Ok(())
}

/// `I^{⊗(n-k-1)} ⊗ Q ⊗ I^{⊗k}`.
pub fn full_single_unitary(n: usize, k: usize, q: &GateMatrix) -> Result<DenseUnitary> {
    check_width(n)?;
    if k >= n {
        return Err(Error::Range { index: k, limit: n });
    }
    Ok(embed(n, &[(k, DenseUnitary::from_gate(q))]))
}

/// `P0_c ⊗ I_t + P1_c ⊗ Q_t`, each factor embedded at its qubit position.
pub fn full_controlled_unitary(n: usize, c: usize, t: usize, q: &GateMatrix) -> Result<DenseUnitary> {
    check_width(n)?;
    if c == t {
        return Err(Error::SameQubit(c));
    }
    for i in [c, t] {
        if i >= n {
            return Err(Error::Range { index: i, limit: n });
        }
    }
    let zero = Amplitude::new(0.0, 0.0);
    let one = Amplitude::new(1.0, 0.0);
    let p0 = DenseUnitary { dim: 2, entries: vec![one, zero, zero, zero] };
    let p1 = DenseUnitary { dim: 2, entries: vec![zero, zero, zero, one] };
    let off = embed(n, &[(c, p0)]);
    let on = embed(n, &[(c, p1), (t, DenseUnitary::from_gate(q))]);
    Ok(off.add(&on))
}

/// Kronecker product over qubits `n-1 .. 0` (most significant factor first),
/// with the given 2×2 factors at their positions and identity elsewhere.
fn embed(n: usize, factors: &[(usize, DenseUnitary)]) -> DenseUnitary {
    let mut acc = DenseUnitary::identity(1);
    for qubit in (0..n).rev() {
        let f = factors
            .iter()
            .find(|(q, _)| *q == qubit)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| DenseUnitary::identity(2));
        acc = acc.kron(&f);
    }
    acc
}

pub fn gate_unitary(n: usize, gate: &GateOp) -> Result<DenseUnitary> {
    match *gate {
        GateOp::Single { target, ref matrix } => full_single_unitary(n, target, matrix),
        GateOp::Controlled { control, target, ref matrix } => {
            full_controlled_unitary(n, control, target, matrix)
        }
    }
}

/// Run `circuit` from `|basis_index⟩` by dense matrix-vector products.
pub fn oracle_run(circuit: &Circuit, basis_index: usize) -> Result<Vec<Amplitude>> {
    let n = circuit.qubits();
    check_width(n)?;
    let mut v = vec![Amplitude::new(0.0, 0.0); 1 << n];
    *v.get_mut(basis_index).ok_or(Error::Range {
        index: basis_index,
        limit: 1 << n,
    })? = Amplitude::new(1.0, 0.0);
    oracle_apply(circuit, v)
}

/// Apply `circuit` to an arbitrary full state vector.
pub fn oracle_apply(circuit: &Circuit, mut v: Vec<Amplitude>) -> Result<Vec<Amplitude>> {
    let n = circuit.qubits();
    check_width(n)?;
    if v.len() != 1 << n {
        return Err(Error::Argument("state length does not match circuit width"));
    }
    for g in circuit.gates() {
        v = gate_unitary(n, g)?.matvec(&v);
    }
    Ok(v)
}
