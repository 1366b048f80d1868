//! Gate operations, circuits, Fourier-transform generators and random
//! circuits for testing.
//!
//! Fourier circuits carry no terminal swap network, so the transform's
//! output is bit-reversed: `QFT|x⟩ = 2^{-n/2} Σ_k e^{2πi·xk/2^n} |rev_n(k)⟩`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gate::GateMatrix;
use crate::Amplitude;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Single {
        target: usize,
        matrix: GateMatrix,
    },
    Controlled {
        control: usize,
        target: usize,
        matrix: GateMatrix,
    },
}

impl GateOp {
    pub fn single(target: usize, matrix: GateMatrix) -> Self {
        Self::Single { target, matrix }
    }

    pub fn controlled(control: usize, target: usize, matrix: GateMatrix) -> Self {
        Self::Controlled {
            control,
            target,
            matrix,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Self::Single { target, .. } | Self::Controlled { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Self::Single { .. } => None,
            Self::Controlled { control, .. } => Some(control),
        }
    }

    pub fn matrix(&self) -> &GateMatrix {
        match self {
            Self::Single { matrix, .. } | Self::Controlled { matrix, .. } => matrix,
        }
    }

    /// Target first, then control if any.
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        core::iter::once(self.target()).chain(self.control())
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().max().unwrap_or(0)
    }

    /// The same gate with `Q` replaced by `Q†`.
    pub fn inverse(&self) -> Self {
        match *self {
            Self::Single { target, matrix } => Self::single(target, matrix.dagger()),
            Self::Controlled { control, target, matrix } => {
                Self::controlled(control, target, matrix.dagger())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<GateOp>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self {
            qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(qubits: usize, gates: Vec<GateOp>) -> Result<Self> {
        let mut c = Self::new(qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// Append a gate, validating its indices against the register width.
    pub fn push(&mut self, gate: GateOp) -> Result<()> {
        for q in gate.qubits() {
            if q >= self.qubits {
                return Err(Error::Range {
                    index: q,
                    limit: self.qubits,
                });
            }
        }
        if gate.control() == Some(gate.target()) {
            return Err(Error::SameQubit(gate.target()));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Reversed order, each gate replaced by its inverse.
    pub fn inverse(&self) -> Self {
        Self {
            qubits: self.qubits,
            gates: self.gates.iter().rev().map(GateOp::inverse).collect(),
        }
    }

    /// `self` followed by `other`.
    pub fn then(mut self, other: &Circuit) -> Result<Self> {
        if other.qubits != self.qubits {
            return Err(Error::Argument("circuit widths differ"));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }
}

/// `n(n+1)/2`, the gate count of either Fourier circuit.
pub const fn fourier_gate_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Inverse Fourier transform: stage `i` applies `H` to qubit `i`, then
/// `R_{c-i+1}†` on target `i` controlled by each `c = i+1 .. n-1`.
pub fn build_iqft(n: usize) -> Circuit {
    let mut gates = Vec::with_capacity(fourier_gate_count(n));
    for i in 0..n {
        gates.push(GateOp::single(i, GateMatrix::h()));
        for c in i + 1..n {
            gates.push(GateOp::controlled(c, i, GateMatrix::rk_dagger((c - i + 1) as u32)));
        }
    }
    Circuit { qubits: n, gates }
}

/// Forward Fourier transform: the inverse's stage layout with qubit order
/// reversed and `R_j` phases in place of `R_j†`.
pub fn build_qft(n: usize) -> Circuit {
    let mut gates = Vec::with_capacity(fourier_gate_count(n));
    for s in 0..n {
        let t = n - 1 - s;
        gates.push(GateOp::single(t, GateMatrix::h()));
        for c in (0..t).rev() {
            gates.push(GateOp::controlled(c, t, GateMatrix::rk((t - c + 1) as u32)));
        }
    }
    Circuit { qubits: n, gates }
}

/// Haar-distributed 2×2 unitary.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> GateMatrix {
    loop {
        let mut g = || {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Amplitude::new(re, im)
        };
        let (a, b, cc, d) = (g(), g(), g(), g());
        // Gram-Schmidt on the columns (a, cc) and (b, d)
        let n0 = libm::sqrt(a.norm_sqr() + cc.norm_sqr());
        if n0 < 1e-8 {
            continue;
        }
        let (u0, u1) = (a / n0, cc / n0);
        let proj = u0.conj() * b + u1.conj() * d;
        let (w0, w1) = (b - proj * u0, d - proj * u1);
        let n1 = libm::sqrt(w0.norm_sqr() + w1.norm_sqr());
        if n1 < 1e-8 {
            continue;
        }
        let m = GateMatrix::new_unchecked(u0, w0 / n1, u1, w1 / n1);
        if m.unitarity_deviation() <= 1e-13 {
            return m;
        }
    }
}

/// Deterministic random circuit: each gate is single or controlled with
/// equal odds (controlled needs `n >= 2`), indices uniform, matrices Haar.
pub fn random_circuit(n: usize, gate_count: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::with_capacity(gate_count);
    for _ in 0..gate_count {
        let q = random_unitary(&mut rng);
        if n >= 2 && rng.random_bool(0.5) {
            let control = rng.random_range(0..n);
            let mut target = rng.random_range(0..n - 1);
            if target >= control {
                target += 1;
            }
            gates.push(GateOp::controlled(control, target, q));
        } else {
            gates.push(GateOp::single(rng.random_range(0..n), q));
        }
    }
    Circuit { qubits: n, gates }
}
