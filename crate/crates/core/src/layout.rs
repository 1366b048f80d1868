use crate::error::{Error, Result};

/// Placement of one rank's slice within the global state vector.
///
/// `n` qubits are split into `m = n - p` local qubits (the low bits of the
/// amplitude index) and `p` rank qubits (the high bits). Rank `r` holds
/// global indices `r * 2^m .. (r + 1) * 2^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    n: usize,
    p: usize,
    rank: usize,
}

/// Largest supported qubit count; keeps every global index inside a `u64`.
pub const MAX_QUBITS: usize = 62;

impl Layout {
    pub fn new(n: usize, p: usize, rank: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Layout("need at least one qubit"));
        }
        if n > MAX_QUBITS {
            return Err(Error::Range {
                index: n,
                limit: MAX_QUBITS + 1,
            });
        }
        if p >= n {
            return Err(Error::Layout("rank exponent must be smaller than qubit count"));
        }
        if rank >= 1 << p {
            return Err(Error::Range {
                index: rank,
                limit: 1 << p,
            });
        }
        Ok(Self { n, p, rank })
    }

    /// Whole state on a single rank.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(n, 0, 0)
    }

    /// Layout for `ranks` ranks; `ranks` must be a power of two.
    pub fn for_ranks(n: usize, ranks: usize, rank: usize) -> Result<Self> {
        if !ranks.is_power_of_two() {
            return Err(Error::Layout("rank count must be a power of two"));
        }
        Self::new(n, ranks.trailing_zeros() as usize, rank)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn rank_bits(&self) -> usize {
        self.p
    }

    pub fn local_qubits(&self) -> usize {
        self.n - self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ranks(&self) -> usize {
        1 << self.p
    }

    pub fn local_len(&self) -> usize {
        1 << self.local_qubits()
    }

    pub fn global_len(&self) -> u64 {
        1u64 << self.n
    }

    /// Same geometry, different rank.
    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        Self::new(self.n, self.p, rank)
    }

    pub fn is_local(&self, qubit: usize) -> bool {
        qubit < self.local_qubits()
    }

    /// First global index held by this rank.
    pub fn global_base(&self) -> u64 {
        (self.rank as u64) << self.local_qubits()
    }

    pub fn to_global(&self, local: usize) -> u64 {
        self.global_base() | local as u64
    }

    /// Split a global index into `(rank, local offset)`.
    pub fn split(&self, global: u64) -> (usize, usize) {
        let m = self.local_qubits();
        ((global >> m) as usize, (global & ((1u64 << m) - 1)) as usize)
    }

    /// Value of global bit `qubit` for this rank's rank bits; `qubit >= m`.
    pub fn rank_bit(&self, qubit: usize) -> bool {
        debug_assert!(qubit >= self.local_qubits());
        (self.rank >> (qubit - self.local_qubits())) & 1 == 1
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n {
            Err(Error::Range {
                index: qubit,
                limit: self.n,
            })
        } else {
            Ok(())
        }
    }
}
