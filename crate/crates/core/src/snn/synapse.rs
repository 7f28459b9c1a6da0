//! Static synapse tables and spike delivery.

use super::lif::{Increment, SpikeEvent};
use super::params::{NeuronParams, Receptor};
use super::SnnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub post: u32,
    pub receptor: Receptor,
    /// nS
    pub weight: f64,
}

/// Synapses grouped by presynaptic index (compressed rows), so that delivery
/// of one spike walks a contiguous slice.
///
/// `pre` indices are local to the presynaptic layer; `pre_offset` maps the
/// global neuron id of a [`SpikeEvent`] onto that local index.
#[derive(Debug, Clone, Default)]
pub struct SynapseTable {
    pre_offset: u32,
    row_start: Vec<usize>,
    synapses: Vec<Synapse>,
    n_post: usize,
}

impl SynapseTable {
    pub fn builder(pre_offset: u32, n_pre: usize, n_post: usize) -> SynapseTableBuilder {
        SynapseTableBuilder { pre_offset, n_pre, n_post, entries: Vec::new() }
    }

    pub fn n_pre(&self) -> usize {
        self.row_start.len().saturating_sub(1)
    }

    pub fn n_post(&self) -> usize {
        self.n_post
    }

    pub fn len(&self) -> usize {
        self.synapses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synapses.is_empty()
    }

    /// Outgoing synapses of local presynaptic index `pre`.
    pub fn fan_out(&self, pre: usize) -> &[Synapse] {
        if pre + 1 >= self.row_start.len() {
            return &[];
        }
        &self.synapses[self.row_start[pre]..self.row_start[pre + 1]]
    }

    pub fn count_receptor(&self, receptor: Receptor) -> usize {
        self.synapses.iter().filter(|s| s.receptor == receptor).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Synapse)> + '_ {
        (0..self.n_pre()).flat_map(move |pre| self.fan_out(pre).iter().map(move |s| (pre, s)))
    }

    /// Every synapse must target a receptor the post population carries.
    pub fn check_receptors(&self, post: &NeuronParams) -> Result<(), SnnError> {
        match self.synapses.iter().find(|s| !post.has_receptor(s.receptor)) {
            Some(s) => Err(SnnError::ReceptorMismatch { post: s.post, receptor: s.receptor }),
            None => Ok(()),
        }
    }

    /// Add the fan-out of local presynaptic index `pre` into `out`.
    #[inline]
    pub fn deliver_local(&self, pre: usize, out: &mut [Increment]) {
        for s in self.fan_out(pre) {
            out[s.post as usize].add(s.receptor, s.weight);
        }
    }

    /// Add the fan-out of every event into `out` (length `n_post`). Events
    /// from neurons outside the table's presynaptic range have no fan-out.
    pub fn deliver_into(&self, events: &[SpikeEvent], out: &mut [Increment]) {
        for e in events {
            if let Some(pre) = e.neuron_id.checked_sub(self.pre_offset) {
                self.deliver_local(pre as usize, out);
            }
        }
    }
}

/// Sum the weights of all synapses hit by `events`, per post neuron and
/// receptor. Purely additive, so the result is independent of event order.
pub fn deliver_spikes(events: &[SpikeEvent], table: &SynapseTable) -> Vec<Increment> {
    let mut out = vec![Increment::default(); table.n_post()];
    table.deliver_into(events, &mut out);
    out
}

pub struct SynapseTableBuilder {
    pre_offset: u32,
    n_pre: usize,
    n_post: usize,
    entries: Vec<(u32, Synapse)>,
}

impl SynapseTableBuilder {
    pub fn push(&mut self, pre: usize, post: usize, receptor: Receptor, weight: f64) -> Result<(), SnnError> {
        if pre >= self.n_pre || post >= self.n_post {
            return Err(SnnError::IndexOverflow { pre, post });
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(SnnError::InvalidWeight { pre, post, weight });
        }
        self.entries.push((pre as u32, Synapse { post: post as u32, receptor, weight }));
        Ok(())
    }

    pub fn reserve(&mut self, n: usize) {
        self.entries.reserve(n);
    }

    pub fn build(mut self) -> SynapseTable {
        self.entries.sort_by_key(|(pre, _)| *pre);
        let mut row_start = vec![0usize; self.n_pre + 1];
        for (pre, _) in &self.entries {
            row_start[*pre as usize + 1] += 1;
        }
        for i in 0..self.n_pre {
            row_start[i + 1] += row_start[i];
        }
        SynapseTable {
            pre_offset: self.pre_offset,
            row_start,
            synapses: self.entries.into_iter().map(|(_, s)| s).collect(),
            n_post: self.n_post,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spike(id: u32) -> SpikeEvent {
        SpikeEvent { neuron_id: id, time: 0.0 }
    }

    fn two_way() -> SynapseTable {
        let mut b = SynapseTable::builder(0, 2, 3);
        b.push(0, 0, Receptor::Ampa, 0.18).unwrap();
        b.push(0, 1, Receptor::Ampa, 0.18).unwrap();
        b.push(1, 2, Receptor::Gaba, 1.0).unwrap();
        b.build()
    }

    #[test]
    fn single_spike_fans_out() {
        let inc = deliver_spikes(&[spike(0)], &two_way());
        assert_eq!(inc[0].ampa, 0.18);
        assert_eq!(inc[1].ampa, 0.18);
        assert_eq!(inc[2], Increment::default());
    }

    #[test]
    fn empty_events_give_empty_increments() {
        let inc = deliver_spikes(&[], &two_way());
        assert!(inc.iter().all(|i| *i == Increment::default()));
    }

    #[test]
    fn repeated_spike_doubles() {
        let inc = deliver_spikes(&[spike(0), spike(0)], &two_way());
        assert_eq!(inc[0].ampa, 0.36);
    }

    #[test]
    fn unknown_pre_has_no_fan_out() {
        let inc = deliver_spikes(&[spike(7)], &two_way());
        assert!(inc.iter().all(|i| *i == Increment::default()));
    }

    #[test]
    fn pre_offset_maps_global_ids() {
        let mut b = SynapseTable::builder(50, 1, 1);
        b.push(0, 0, Receptor::Ampa, 0.5).unwrap();
        let t = b.build();
        assert_eq!(deliver_spikes(&[spike(50)], &t)[0].ampa, 0.5);
        assert_eq!(deliver_spikes(&[spike(49)], &t)[0].ampa, 0.0);
    }

    #[test]
    fn builder_rejects_bad_entries() {
        let mut b = SynapseTable::builder(0, 1, 1);
        assert!(b.push(1, 0, Receptor::Ampa, 0.1).is_err());
        assert!(b.push(0, 0, Receptor::Ampa, -0.1).is_err());
    }

    #[test]
    fn receptor_check_uses_post_params() {
        assert!(two_way().check_receptors(&NeuronParams::granule()).is_err());
        assert!(two_way().check_receptors(&NeuronParams::nuclear()).is_ok());
    }
}
