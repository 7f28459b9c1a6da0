//! Nuclear decoder: agonist minus antagonist spike count, mean-filtered and
//! scaled per joint.

use crate::net::HalfCounts;

pub const DEFAULT_TAPS: usize = 15;

#[derive(Debug, Clone)]
pub struct DcnDecoder {
    gains: Vec<f64>,
    taps: usize,
    /// Ring of past net counts, `taps` per joint.
    history: Vec<i64>,
    sums: Vec<i64>,
    head: usize,
}

impl DcnDecoder {
    /// `gains` in N·m per spike. The history starts empty (all zero).
    pub fn new(gains: Vec<f64>, taps: usize) -> Self {
        assert!(taps >= 1, "decoder needs at least one tap");
        let n = gains.len();
        DcnDecoder { gains, taps, history: vec![0; n * taps], sums: vec![0; n], head: 0 }
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Push one step of counts and write the torque of every joint.
    pub fn decode(&mut self, counts: &[HalfCounts], torque: &mut [f64]) {
        for (j, c) in counts.iter().enumerate().take(self.gains.len()) {
            let net = c.agonist as i64 - c.antagonist as i64;
            let slot = &mut self.history[j * self.taps + self.head];
            self.sums[j] += net - *slot;
            *slot = net;
            torque[j] = self.gains[j] * self.sums[j] as f64 / self.taps as f64;
        }
        self.head = (self.head + 1) % self.taps;
    }
}
