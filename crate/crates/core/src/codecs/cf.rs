//! Climbing-fibre encoder: Poisson sampling of the per-joint error.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::net::MicroComplexLayout;

/// Error-to-rate map of the climbing fibres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfRates {
    /// Background rate at zero error, Hz.
    pub r_min: f64,
    /// Rate at saturated error, Hz.
    pub r_max: f64,
    /// Error at which the rate saturates, rad.
    pub eps_max: f64,
}

impl Default for CfRates {
    fn default() -> Self {
        CfRates { r_min: 1.0, r_max: 10.0, eps_max: 0.1 }
    }
}

impl CfRates {
    /// Rate of the subgroup that is driven by positive `eps`, Hz.
    #[inline]
    pub fn rate(&self, eps: f64) -> f64 {
        let drive = (eps.max(0.0) / self.eps_max).min(1.0);
        self.r_min + (self.r_max - self.r_min) * drive
    }
}

/// Sample CF spikes for one control step of `dt` seconds. Agonist fibres of
/// joint `j` fire at `rate(eps[j])`, antagonists at `rate(-eps[j])`.
pub fn encode_cf<R: Rng>(
    eps: &[f64],
    rates: &CfRates,
    layout: &MicroComplexLayout,
    rng: &mut R,
    dt: f64,
    out: &mut Vec<usize>,
) {
    out.clear();
    for (blk, &e) in layout.joints.iter().zip(eps) {
        for (cells, p) in [(&blk.agonist, rates.rate(e) * dt), (&blk.antagonist, rates.rate(-e) * dt)] {
            for cf in cells.clone() {
                if rng.random::<f64>() < p {
                    out.push(cf);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let r = CfRates::default();
        assert_eq!(r.rate(0.0), 1.0);
        assert_eq!(r.rate(-0.3), 1.0);
        assert_eq!(r.rate(0.1), 10.0);
        assert_eq!(r.rate(5.0), 10.0);
        assert!((r.rate(0.05) - 5.5).abs() < 1e-12);
        assert!((r.rate(0.1) * 0.002 - 0.02).abs() < 1e-15);
    }
}
