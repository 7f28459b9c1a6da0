//! The assembled micro-complex network and its per-control-step update.

use super::config::{LayerOffsets, MicroComplexLayout, NetworkConfig};
use super::plasticity::{ltd_on_cf_spike, ltp_on_pf_spike, EligibilityTraces, PfPcWeights, PlasticityParams};
use super::NetError;
use crate::snn::{step_sparse, step_with, ActiveSet, Increment, Integrator, LifState, Receptor, SpikeEvent, SynapseTable};

/// Control step length in ms.
pub const CONTROL_STEP_MS: f64 = 2.0;

/// Agonist and antagonist nuclear spike counts of one joint over one control step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HalfCounts {
    pub agonist: u32,
    pub antagonist: u32,
}

#[derive(Debug, Clone)]
pub struct CerebellarNetwork {
    cfg: NetworkConfig,
    plasticity: PlasticityParams,
    layout: MicroComplexLayout,
    /// DCN local index -> (joint, is_agonist)
    dcn_owner: Vec<(u32, bool)>,

    gc: Integrator,
    pc: Integrator,
    dcn: Integrator,
    gc_state: Vec<LifState>,
    pc_state: Vec<LifState>,
    dcn_state: Vec<LifState>,
    gc_in: Vec<Increment>,
    /// Granule cells that may not be at rest; the rest are skipped.
    gc_active: ActiveSet,
    pc_in: Vec<Increment>,
    dcn_in: Vec<Increment>,

    mf_gc: SynapseTable,
    mf_dcn: SynapseTable,
    cf_pc: SynapseTable,
    cf_dcn: SynapseTable,
    pc_dcn: SynapseTable,
    weights: PfPcWeights,
    traces: EligibilityTraces,

    /// Spikes emitted during the previous substep, delivered at the next one.
    gc_spikes: Vec<u32>,
    pc_spikes: Vec<u32>,
    scratch: Vec<SpikeEvent>,
    counts: Vec<HalfCounts>,
    substeps_per_step: usize,
    substep: u64,
}

/// Build the network described by `cfg` with all weights at their initial values.
pub fn build_network(cfg: &NetworkConfig, plasticity: &PlasticityParams) -> Result<CerebellarNetwork, NetError> {
    cfg.validate()?;
    plasticity.validate(cfg.weights.pf_pc)?;
    let layout = MicroComplexLayout::new(cfg);
    let off = layout.offsets;
    let w = &cfg.weights;
    let cells = cfg.n_complex_cells();
    let (n_mf, n_gc) = (cfg.n_mf(), cfg.n_gc());

    // Each GC listens to one fibre of each of its own joint's four subgroups.
    let mut mf_gc = SynapseTable::builder(off.mf, n_mf, n_gc);
    mf_gc.reserve(4 * n_gc);
    for gc in 0..n_gc {
        for mf in layout.gc_parents(gc) {
            mf_gc.push(mf, gc, Receptor::Ampa, w.mf_gc)?;
        }
    }
    let mut mf_dcn = SynapseTable::builder(off.mf, n_mf, cells);
    mf_dcn.reserve(n_mf * cells);
    for mf in 0..n_mf {
        for dcn in 0..cells {
            mf_dcn.push(mf, dcn, Receptor::Ampa, w.mf_dcn)?;
        }
    }
    let mut cf_pc = SynapseTable::builder(off.cf, cells, cells);
    let mut cf_dcn = SynapseTable::builder(off.cf, cells, cells);
    let mut pc_dcn = SynapseTable::builder(off.pc, cells, cells);
    for i in 0..cells {
        cf_pc.push(i, i, Receptor::Ampa, w.cf_pc)?;
        cf_dcn.push(i, i, Receptor::Ampa, w.cf_dcn_ampa)?;
        cf_dcn.push(i, i, Receptor::Nmda, w.cf_dcn_nmda)?;
        pc_dcn.push(i, i, Receptor::Gaba, w.pc_dcn)?;
    }
    let (mf_gc, mf_dcn, cf_pc, cf_dcn, pc_dcn) =
        (mf_gc.build(), mf_dcn.build(), cf_pc.build(), cf_dcn.build(), pc_dcn.build());
    let pops = &cfg.neurons;
    mf_gc.check_receptors(&pops.granule)?;
    cf_pc.check_receptors(&pops.purkinje)?;
    mf_dcn.check_receptors(&pops.nuclear)?;
    cf_dcn.check_receptors(&pops.nuclear)?;
    pc_dcn.check_receptors(&pops.nuclear)?;
    if !pops.purkinje.has_receptor(Receptor::Ampa) {
        return Err(NetError::InvalidConfig("Purkinje cells need AMPA receptors for parallel fibres".into()));
    }

    let dt = cfg.substep_ms;
    let mut dcn_owner = vec![(0u32, false); cells];
    for (j, blk) in layout.joints.iter().enumerate() {
        blk.agonist.clone().for_each(|i| dcn_owner[i] = (j as u32, true));
        blk.antagonist.clone().for_each(|i| dcn_owner[i] = (j as u32, false));
    }
    Ok(CerebellarNetwork {
        cfg: cfg.clone(),
        plasticity: *plasticity,
        dcn_owner,
        gc: Integrator::new(pops.granule, dt)?,
        pc: Integrator::new(pops.purkinje, dt)?,
        dcn: Integrator::new(pops.nuclear, dt)?,
        gc_state: vec![LifState::at_rest(&pops.granule); n_gc],
        pc_state: vec![LifState::at_rest(&pops.purkinje); cells],
        dcn_state: vec![LifState::at_rest(&pops.nuclear); cells],
        gc_in: vec![Increment::default(); n_gc],
        gc_active: ActiveSet::new(n_gc),
        pc_in: vec![Increment::default(); cells],
        dcn_in: vec![Increment::default(); cells],
        mf_gc,
        mf_dcn,
        cf_pc,
        cf_dcn,
        pc_dcn,
        weights: PfPcWeights::filled(n_gc, cells, w.pf_pc),
        traces: EligibilityTraces::new(n_gc, plasticity, dt)?,
        gc_spikes: Vec::new(),
        pc_spikes: Vec::new(),
        scratch: Vec::new(),
        counts: vec![HalfCounts::default(); cfg.n_joints],
        substeps_per_step: (CONTROL_STEP_MS / dt).round() as usize,
        substep: 0,
        layout,
    })
}

impl CerebellarNetwork {
    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn plasticity(&self) -> &PlasticityParams {
        &self.plasticity
    }

    pub fn layout(&self) -> &MicroComplexLayout {
        &self.layout
    }

    pub fn offsets(&self) -> LayerOffsets {
        self.layout.offsets
    }

    /// Static MF to GC wiring, local indices on both sides.
    pub fn mossy_granule(&self) -> &SynapseTable {
        &self.mf_gc
    }

    pub fn weights(&self) -> &PfPcWeights {
        &self.weights
    }

    pub fn traces(&self) -> &EligibilityTraces {
        &self.traces
    }

    /// Replace the plastic weights, e.g. from a snapshot.
    pub fn set_weights(&mut self, weights: PfPcWeights) -> Result<(), NetError> {
        if weights.n_pf() != self.weights.n_pf() || weights.n_pc() != self.weights.n_pc() {
            return Err(NetError::Snapshot(format!(
                "snapshot is {}x{}, network needs {}x{}",
                weights.n_pf(),
                weights.n_pc(),
                self.weights.n_pf(),
                self.weights.n_pc()
            )));
        }
        let (lo, hi) = weights.range();
        if lo < self.plasticity.w_min || hi > self.plasticity.w_max {
            return Err(NetError::Snapshot(format!("snapshot weights span [{lo}, {hi}] outside the bounds")));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn set_plasticity(&mut self, params: PlasticityParams) -> Result<(), NetError> {
        if params.d_k != self.plasticity.d_k || params.tau_ltd != self.plasticity.tau_ltd {
            return Err(NetError::InvalidConfig("kernel shape cannot change on a live network".into()));
        }
        self.plasticity = params;
        Ok(())
    }

    /// Simulation time at the start of the next step, ms.
    pub fn time_ms(&self) -> f64 {
        self.substep as f64 * self.cfg.substep_ms
    }

    /// Granule cells currently integrated (not at rest).
    pub fn active_granule_cells(&self) -> usize {
        self.gc_active.len()
    }

    pub fn membrane(&self) -> (&[LifState], &[LifState], &[LifState]) {
        (&self.gc_state, &self.pc_state, &self.dcn_state)
    }

    /// Advance one 2 ms control step.
    ///
    /// `mf_active` lists local MF indices spiking at the step start,
    /// `cf_spikes` local CF indices firing at the step start. With
    /// `plastic` set, PF spikes potentiate and CF spikes depress the PF-PC
    /// weights. Every spike is appended to `record` when given.
    pub fn step(
        &mut self,
        mf_active: &[usize],
        cf_spikes: &[usize],
        plastic: bool,
        mut record: Option<&mut Vec<SpikeEvent>>,
    ) -> Result<&[HalfCounts], NetError> {
        let off = self.layout.offsets;
        let dt = self.cfg.substep_ms;
        self.counts.iter_mut().for_each(|c| *c = HalfCounts::default());

        for k in 0..self.substeps_per_step {
            let t0 = self.substep as f64 * dt;
            if k == 0 {
                for &mf in mf_active {
                    if mf >= self.mf_gc.n_pre() {
                        return Err(NetError::UnknownInput { layer: "mossy fibre", index: mf });
                    }
                    for syn in self.mf_gc.fan_out(mf) {
                        self.gc_in[syn.post as usize].ampa += syn.weight;
                        self.gc_active.touch(syn.post as usize);
                    }
                    self.mf_dcn.deliver_local(mf, &mut self.dcn_in);
                }
                for &cf in cf_spikes {
                    if cf >= self.cf_pc.n_pre() {
                        return Err(NetError::UnknownInput { layer: "climbing fibre", index: cf });
                    }
                    self.cf_pc.deliver_local(cf, &mut self.pc_in);
                    self.cf_dcn.deliver_local(cf, &mut self.dcn_in);
                    if plastic {
                        ltd_on_cf_spike(cf, &self.traces, &mut self.weights, &self.plasticity);
                    }
                }
                if let Some(rec) = record.as_deref_mut() {
                    rec.extend(mf_active.iter().map(|&i| SpikeEvent { neuron_id: off.mf + i as u32, time: t0 }));
                    rec.extend(cf_spikes.iter().map(|&i| SpikeEvent { neuron_id: off.cf + i as u32, time: t0 }));
                }
            }

            for &pf in &self.gc_spikes {
                let pf = pf as usize;
                for (inc, &w) in self.pc_in.iter_mut().zip(self.weights.row(pf)) {
                    inc.ampa += w;
                }
                if plastic {
                    ltp_on_pf_spike(pf, &mut self.weights, &self.plasticity);
                }
            }
            for &pc in &self.pc_spikes {
                self.pc_dcn.deliver_local(pc as usize, &mut self.dcn_in);
            }

            self.scratch.clear();
            step_sparse(&self.gc, &mut self.gc_state, &self.gc_in, &mut self.gc_active, t0, 0, &mut self.scratch)
                .map_err(|e| NetError::Neuron { layer: "granule", source: e })?;
            self.gc_spikes.clear();
            self.gc_spikes.extend(self.scratch.iter().map(|s| s.neuron_id));
            self.gc_spikes.sort_unstable();

            self.scratch.clear();
            step_with(&self.pc, &mut self.pc_state, &self.pc_in, t0, 0, &mut self.scratch)
                .map_err(|e| NetError::Neuron { layer: "purkinje", source: e })?;
            self.pc_spikes.clear();
            self.pc_spikes.extend(self.scratch.iter().map(|s| s.neuron_id));

            self.scratch.clear();
            step_with(&self.dcn, &mut self.dcn_state, &self.dcn_in, t0, 0, &mut self.scratch)
                .map_err(|e| NetError::Neuron { layer: "nuclear", source: e })?;
            for s in &self.scratch {
                let (j, agonist) = self.dcn_owner[s.neuron_id as usize];
                let c = &mut self.counts[j as usize];
                if agonist {
                    c.agonist += 1;
                } else {
                    c.antagonist += 1;
                }
            }

            if let Some(rec) = record.as_deref_mut() {
                let t1 = t0 + dt;
                rec.extend(self.gc_spikes.iter().map(|&i| SpikeEvent { neuron_id: off.gc + i, time: t1 }));
                rec.extend(self.pc_spikes.iter().map(|&i| SpikeEvent { neuron_id: off.pc + i, time: t1 }));
                rec.extend(self.scratch.iter().map(|s| SpikeEvent { neuron_id: off.dcn + s.neuron_id, time: t1 }));
            }

            if k == 0 {
                for &mf in mf_active {
                    for s in self.mf_gc.fan_out(mf) {
                        self.gc_in[s.post as usize] = Increment::default();
                    }
                }
            }
            self.pc_in.iter_mut().for_each(|i| *i = Increment::default());
            self.dcn_in.iter_mut().for_each(|i| *i = Increment::default());
            self.traces.advance(&self.gc_spikes);
            self.substep += 1;
        }
        Ok(&self.counts)
    }
}
