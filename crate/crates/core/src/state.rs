use crate::buffer::AlignedAmps;
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::Amplitude;

/// One rank's slice of the global state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalState {
    layout: Layout,
    amps: AlignedAmps,
    corrupt: bool,
}

impl LocalState {
    /// All-zero slice. Not normalised; callers fill it in.
    pub fn zeroed(layout: Layout) -> Self {
        Self {
            layout,
            amps: AlignedAmps::zeroed(layout.local_len()),
            corrupt: false,
        }
    }

    /// This rank's slice of the computational basis state `|basis_index⟩`.
    pub fn basis(layout: Layout, basis_index: u64) -> Result<Self> {
        if basis_index >= layout.global_len() {
            return Err(Error::Range {
                index: basis_index as usize,
                limit: layout.global_len() as usize,
            });
        }
        let mut s = Self::zeroed(layout);
        let (rank, local) = layout.split(basis_index);
        if rank == layout.rank() {
            s.amps[local] = Amplitude::new(1.0, 0.0);
        }
        Ok(s)
    }

    /// Build from explicit amplitudes (length must be `2^m`).
    pub fn from_amps(layout: Layout, amps: &[Amplitude]) -> Result<Self> {
        if amps.len() != layout.local_len() {
            return Err(Error::Layout("amplitude count does not match layout"));
        }
        Ok(Self {
            layout,
            amps: AlignedAmps::from_slice(amps),
            corrupt: false,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Amplitude] {
        &mut self.amps
    }

    /// Set when a distributed gate aborted half way through.
    pub fn is_corrupt(&self) -> bool {
        self.corrupt
    }

    pub(crate) fn mark_corrupt(&mut self) {
        self.corrupt = true;
    }

    pub(crate) fn ensure_intact(&self) -> Result<()> {
        if self.corrupt {
            Err(Error::Corrupt)
        } else {
            Ok(())
        }
    }

    /// Σ|α|² over this slice, summed in index order.
    pub fn local_norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Σ|α|² over this slice's indices whose global bit `qubit` is set.
    pub fn local_prob_one(&self, qubit: usize) -> Result<f64> {
        self.layout.check_qubit(qubit)?;
        if !self.layout.is_local(qubit) {
            return Ok(if self.layout.rank_bit(qubit) {
                self.local_norm_sq()
            } else {
                0.0
            });
        }
        let half = 1usize << qubit;
        Ok(self
            .amps
            .chunks_exact(2 * half)
            .flat_map(|g| g[half..].iter())
            .map(|a| a.norm_sqr())
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_on_single_rank() {
        let s = LocalState::basis(Layout::single(2).unwrap(), 0).unwrap();
        let want = [1.0, 0.0, 0.0, 0.0];
        for (a, w) in s.amps().iter().zip(want) {
            assert_eq!(*a, Amplitude::new(w, 0.0));
        }
        assert_eq!(s.local_norm_sq(), 1.0);
    }

    #[test]
    fn basis_split_across_ranks() {
        let r0 = LocalState::basis(Layout::new(2, 1, 0).unwrap(), 3).unwrap();
        let r1 = LocalState::basis(Layout::new(2, 1, 1).unwrap(), 3).unwrap();
        assert!(r0.amps().iter().all(|a| a.norm_sqr() == 0.0));
        assert_eq!(r1.amps()[0], Amplitude::new(0.0, 0.0));
        assert_eq!(r1.amps()[1], Amplitude::new(1.0, 0.0));
    }

    #[test]
    fn basis_out_of_range() {
        let err = LocalState::basis(Layout::single(3).unwrap(), 8).unwrap_err();
        assert!(matches!(err, Error::Range { index: 8, .. }));
    }

    #[test]
    fn zeroed_norm() {
        assert_eq!(LocalState::zeroed(Layout::single(4).unwrap()).local_norm_sq(), 0.0);
    }

    #[test]
    fn prob_of_bit() {
        let l = Layout::single(2).unwrap();
        assert_eq!(LocalState::basis(l, 0).unwrap().local_prob_one(0).unwrap(), 0.0);
        assert_eq!(LocalState::basis(l, 3).unwrap().local_prob_one(1).unwrap(), 1.0);
        assert!(LocalState::basis(l, 3).unwrap().local_prob_one(2).is_err());
        // rank bit
        let r1 = LocalState::basis(Layout::new(2, 1, 1).unwrap(), 3).unwrap();
        assert_eq!(r1.local_prob_one(1).unwrap(), 1.0);
        assert_eq!(r1.local_prob_one(0).unwrap(), 1.0);
    }
}
