//! Best-case time per gate from memory and network traffic.
//!
//! A rank holds `2^(m+4)` bytes of state. A local single-qubit gate reads
//! and writes all of it; a controlled gate touches half. A gate that pairs
//! ranks moves half the slice out and back, counted as bytes sent plus
//! bytes received against a bidirectional network bandwidth.

use crate::circuit::GateOp;
use crate::error::{Error, Result};

/// Bandwidths in bytes per second (decimal units: 40 GB/s is `40e9`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParams {
    pub mem_bandwidth: f64,
    pub net_bandwidth: f64,
    pub llc_bytes: usize,
}

impl MachineParams {
    pub fn new(mem_bandwidth: f64, net_bandwidth: f64, llc_bytes: usize) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(mem_bandwidth) || !ok(net_bandwidth) || llc_bytes == 0 {
            return Err(Error::Argument("machine parameters must be positive"));
        }
        Ok(Self {
            mem_bandwidth,
            net_bandwidth,
            llc_bytes,
        })
    }
}

/// The six gate placements distinguished by the bound model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundCase {
    /// Single-qubit, `k < m`.
    SingleLocal,
    /// Single-qubit, `k >= m`.
    SingleRemote,
    /// Controlled, `t < m`, `c < m`.
    ControlledLocal,
    /// Controlled, `t < m`, `c >= m`.
    ControlledRankControl,
    /// Controlled, `t >= m`, `c < m`.
    ControlledRemoteTarget,
    /// Controlled, `t >= m`, `c >= m`.
    ControlledRemoteBoth,
}

impl BoundCase {
    pub const ALL: [BoundCase; 6] = [
        Self::SingleLocal,
        Self::SingleRemote,
        Self::ControlledLocal,
        Self::ControlledRankControl,
        Self::ControlledRemoteTarget,
        Self::ControlledRemoteBoth,
    ];

    pub fn classify(gate: &GateOp, m: usize) -> Self {
        match *gate {
            GateOp::Single { target, .. } if target < m => Self::SingleLocal,
            GateOp::Single { .. } => Self::SingleRemote,
            GateOp::Controlled { control, target, .. } => match (target < m, control < m) {
                (true, true) => Self::ControlledLocal,
                (true, false) => Self::ControlledRankControl,
                (false, true) => Self::ControlledRemoteTarget,
                (false, false) => Self::ControlledRemoteBoth,
            },
        }
    }

    /// 1-based case number as tabulated.
    pub fn id(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id).checked_sub(1)?).copied()
    }

    pub fn uses_network(self) -> bool {
        matches!(
            self,
            Self::SingleRemote | Self::ControlledRemoteTarget | Self::ControlledRemoteBoth
        )
    }

    /// Traffic term in bytes for a rank holding `2^m` amplitudes.
    pub fn traffic_bytes(self, m: usize) -> u64 {
        let shift = match self {
            Self::ControlledLocal | Self::ControlledRemoteTarget => m + 4,
            _ => m + 5,
        };
        1u64 << shift
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::SingleLocal => "single k<m",
            Self::SingleRemote => "single k>=m",
            Self::ControlledLocal => "controlled t<m c<m",
            Self::ControlledRankControl => "controlled t<m c>=m",
            Self::ControlledRemoteTarget => "controlled t>=m c<m",
            Self::ControlledRemoteBoth => "controlled t>=m c>=m",
        }
    }
}

/// Best-case seconds per gate.
pub fn lower_bound_seconds(case: BoundCase, m: usize, params: &MachineParams) -> Result<f64> {
    if m == 0 {
        return Err(Error::Argument("need at least one local qubit"));
    }
    let bw = if case.uses_network() {
        params.net_bandwidth
    } else {
        params.mem_bandwidth
    };
    Ok(case.traffic_bytes(m) as f64 / bw)
}

/// Bytes per second.
pub fn achieved_bandwidth(bytes_moved: u64, seconds: f64) -> Result<f64> {
    if seconds.is_nan() || seconds <= 0.0 || !seconds.is_finite() {
        return Err(Error::Argument("elapsed time must be positive"));
    }
    Ok(bytes_moved as f64 / seconds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateMatrix;

    fn reference_machine() -> MachineParams {
        MachineParams::new(40e9, 5.5e9, 20 << 20).unwrap()
    }

    #[test]
    fn tabulated_values_at_m29() {
        let want = [0.43, 3.12, 0.21, 0.43, 1.56, 3.12];
        for (case, w) in BoundCase::ALL.into_iter().zip(want) {
            let got = lower_bound_seconds(case, 29, &reference_machine()).unwrap();
            assert!((got - w).abs() <= 0.005, "{case:?}: {got}");
        }
    }

    #[test]
    fn ratio_and_monotonicity() {
        let p = reference_machine();
        for m in 1..40 {
            let l = lower_bound_seconds(BoundCase::SingleLocal, m, &p).unwrap();
            let r = lower_bound_seconds(BoundCase::SingleRemote, m, &p).unwrap();
            assert!((r / l - 40.0 / 5.5).abs() < 1e-12);
            for case in BoundCase::ALL {
                let a = lower_bound_seconds(case, m, &p).unwrap();
                let b = lower_bound_seconds(case, m + 1, &p).unwrap();
                assert!(b > a);
            }
            assert!(
                lower_bound_seconds(BoundCase::ControlledRemoteTarget, m, &p).unwrap()
                    >= lower_bound_seconds(BoundCase::ControlledLocal, m, &p).unwrap()
            );
        }
    }

    #[test]
    fn classification() {
        let x = GateMatrix::x();
        let m = 4;
        assert_eq!(BoundCase::classify(&GateOp::single(3, x), m), BoundCase::SingleLocal);
        assert_eq!(BoundCase::classify(&GateOp::single(4, x), m), BoundCase::SingleRemote);
        assert_eq!(BoundCase::classify(&GateOp::controlled(1, 2, x), m), BoundCase::ControlledLocal);
        assert_eq!(BoundCase::classify(&GateOp::controlled(5, 2, x), m), BoundCase::ControlledRankControl);
        assert_eq!(BoundCase::classify(&GateOp::controlled(1, 5, x), m), BoundCase::ControlledRemoteTarget);
        assert_eq!(BoundCase::classify(&GateOp::controlled(6, 5, x), m), BoundCase::ControlledRemoteBoth);
        for c in BoundCase::ALL {
            assert_eq!(BoundCase::from_id(c.id()), Some(c));
        }
        assert_eq!(BoundCase::from_id(0), None);
        assert_eq!(BoundCase::from_id(7), None);
    }

    #[test]
    fn bandwidth() {
        let bw = achieved_bandwidth(1 << 34, 0.43).unwrap();
        assert!((bw / 1e9 - 40.0).abs() < 0.05);
        assert_eq!(achieved_bandwidth(0, 1.0).unwrap(), 0.0);
        assert!(achieved_bandwidth(1, 0.0).is_err());
        assert!(achieved_bandwidth(1, -1.0).is_err());
        assert!(MachineParams::new(0.0, 1.0, 1).is_err());
    }
}
