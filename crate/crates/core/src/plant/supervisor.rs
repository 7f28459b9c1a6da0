//! Safety supervisor: a spring-damper that engages only outside the working range.

use serde::{Deserialize, Serialize};

use super::{PlantState, SeaJointParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisorParams {
    /// N·m/rad
    pub k_sup: f64,
    /// N·m·s/rad
    pub d_sup: f64,
}

impl Default for SupervisorParams {
    fn default() -> Self {
        SupervisorParams { k_sup: 50.0, d_sup: 2.0 }
    }
}

/// Add the corrective torque to `tau` for every joint outside `[q_lo, q_hi]`.
/// The bounds themselves count as inside.
pub fn supervise(state: &PlantState, tau: &mut [f64], joints: &[SeaJointParams], params: &SupervisorParams) {
    for ((t, s), p) in tau.iter_mut().zip(&state.joints).zip(joints) {
        let over = if s.q > p.q_hi {
            s.q - p.q_hi
        } else if s.q < p.q_lo {
            s.q - p.q_lo
        } else {
            continue;
        };
        *t -= params.k_sup * over + params.d_sup * s.q_dot;
    }
}
