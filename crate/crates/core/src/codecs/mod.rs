//! The analogue/spike boundary: mossy-fibre state encoder, climbing-fibre
//! error encoder and the nuclear spike-count torque decoder.

mod cf;
mod decoder;
mod mf;

pub use cf::{encode_cf, CfRates};
pub use decoder::{DcnDecoder, DEFAULT_TAPS};
pub use mf::{bin, encode_mf, EncoderRanges, JointRange};

use serde::{Deserialize, Serialize};

/// Desired and actual kinematics of one joint at one control step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JointSample {
    /// Desired angle, rad.
    pub q_d: f64,
    /// Desired velocity, rad/s.
    pub qd_d: f64,
    /// Actual (sensed) angle, rad.
    pub q_a: f64,
    /// Actual (sensed) velocity, rad/s.
    pub qd_a: f64,
}

/// Per-joint signals for one control step.
pub type JointSignals = [JointSample];

/// Instructive error per joint: `(q_d - q_a) + k_v·(qd_d - qd_a)`, rad.
pub fn estimate_error(signals: &JointSignals, k_v: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(signals.iter().map(|s| (s.q_d - s.q_a) + k_v * (s.qd_d - s.qd_a)));
}
