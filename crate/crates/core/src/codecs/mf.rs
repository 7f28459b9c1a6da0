//! Mossy-fibre encoder: each of the four signals of a joint lights one bin
//! of its subgroup.

use serde::{Deserialize, Serialize};

use super::JointSignals;
use crate::net::{Channel, MicroComplexLayout};

/// Binning range of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointRange {
    /// Angle range, rad.
    pub q: [f64; 2],
    /// Velocity range, rad/s.
    pub qd: [f64; 2],
}

pub type EncoderRanges = [JointRange];

/// `clamp(floor(B·(x − lo)/(hi − lo)), 0, B − 1)`. NaN lands in bin 0.
#[inline]
pub fn bin(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let f = (bins as f64 * (x - lo) / (hi - lo)).floor();
    if f >= bins as f64 {
        bins - 1
    } else if f > 0.0 {
        f as usize
    } else {
        0
    }
}

/// Local indices of the active MFs, four per joint in channel order.
pub fn encode_mf(signals: &JointSignals, ranges: &EncoderRanges, layout: &MicroComplexLayout, out: &mut Vec<usize>) {
    out.clear();
    let b = layout.bins;
    for (j, (s, r)) in signals.iter().zip(ranges).enumerate() {
        let values = [
            (Channel::ActualPosition, s.q_a, r.q),
            (Channel::ActualVelocity, s.qd_a, r.qd),
            (Channel::DesiredPosition, s.q_d, r.q),
            (Channel::DesiredVelocity, s.qd_d, r.qd),
        ];
        for (ch, x, [lo, hi]) in values {
            out.push(layout.mf_index(j, ch, bin(x, lo, hi, b)));
        }
    }
}
