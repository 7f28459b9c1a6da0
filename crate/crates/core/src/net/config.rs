//! Network dimensions, projection weights and the micro-complex index layout.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::NetError;
use crate::snn::NeuronParams;

/// Initial weights (nS) of every projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionWeights {
    pub mf_gc: f64,
    pub mf_dcn: f64,
    /// Initial value of the plastic parallel-fibre to Purkinje weights.
    pub pf_pc: f64,
    pub pc_dcn: f64,
    pub cf_pc: f64,
    pub cf_dcn_ampa: f64,
    pub cf_dcn_nmda: f64,
}

impl Default for ProjectionWeights {
    fn default() -> Self {
        ProjectionWeights {
            mf_gc: 0.18,
            mf_dcn: 0.1,
            pf_pc: 1.6,
            pc_dcn: 1.0,
            cf_pc: 0.0,
            cf_dcn_ampa: 0.5,
            cf_dcn_nmda: 0.25,
        }
    }
}

/// Neuron constants per population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationParams {
    pub granule: NeuronParams,
    pub purkinje: NeuronParams,
    pub nuclear: NeuronParams,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            granule: NeuronParams::granule(),
            purkinje: NeuronParams::purkinje(),
            nuclear: NeuronParams::nuclear(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_joints: usize,
    /// Bins per mossy-fibre subgroup (B). Each joint has `4·B` fibres and `B⁴` granule cells.
    pub bins: usize,
    /// Climbing fibres, Purkinje cells and nuclear cells per micro-complex,
    /// split evenly between agonist and antagonist halves.
    pub cells_per_complex: usize,
    pub weights: ProjectionWeights,
    pub neurons: PopulationParams,
    /// Neural substep, ms. Must divide the 2 ms control step.
    pub substep_ms: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig::full_scale()
    }
}

impl NetworkConfig {
    /// Six joints, B = 10, 100 cells per micro-complex.
    pub fn full_scale() -> Self {
        NetworkConfig {
            n_joints: 6,
            bins: 10,
            cells_per_complex: 100,
            weights: ProjectionWeights::default(),
            neurons: PopulationParams::default(),
            substep_ms: 0.5,
        }
    }

    pub fn mf_per_joint(&self) -> usize {
        4 * self.bins
    }

    pub fn gc_per_joint(&self) -> usize {
        self.bins.pow(4)
    }

    pub fn n_mf(&self) -> usize {
        self.n_joints * self.mf_per_joint()
    }

    pub fn n_gc(&self) -> usize {
        self.n_joints * self.gc_per_joint()
    }

    /// Size of the climbing-fibre, Purkinje and nuclear layers (all equal).
    pub fn n_complex_cells(&self) -> usize {
        self.n_joints * self.cells_per_complex
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |msg: String| Err(NetError::InvalidConfig(msg));
        if self.n_joints == 0 {
            return bad("n_joints must be at least 1".into());
        }
        if self.bins < 2 {
            return bad("bins must be at least 2".into());
        }
        if self.cells_per_complex == 0 || self.cells_per_complex % 2 != 0 {
            return bad("cells_per_complex must be even and positive".into());
        }
        let gc = (self.bins as u128).pow(4) * self.n_joints as u128;
        let total = gc + (self.n_mf() as u128) + 3 * (self.n_complex_cells() as u128);
        if total > u32::MAX as u128 {
            return Err(NetError::IndexOverflow(total));
        }
        let plastic = gc * self.n_complex_cells() as u128;
        if plastic > isize::MAX as u128 / 8 {
            return Err(NetError::IndexOverflow(plastic));
        }
        let steps = 2.0 / self.substep_ms;
        if !(self.substep_ms > 0.0) || (steps - steps.round()).abs() > 1e-9 {
            return bad("substep_ms must divide the 2 ms control step".into());
        }
        for p in [&self.neurons.granule, &self.neurons.purkinje, &self.neurons.nuclear] {
            p.validate().map_err(|e| NetError::InvalidConfig(e.to_string()))?;
        }
        let w = &self.weights;
        for (name, v) in [
            ("mf_gc", w.mf_gc),
            ("mf_dcn", w.mf_dcn),
            ("pf_pc", w.pf_pc),
            ("pc_dcn", w.pc_dcn),
            ("cf_pc", w.cf_pc),
            ("cf_dcn_ampa", w.cf_dcn_ampa),
            ("cf_dcn_nmda", w.cf_dcn_nmda),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("weights.{name} must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn synapse_counts(&self) -> SynapseCounts {
        let cells = self.n_complex_cells();
        SynapseCounts {
            mf_gc: 4 * self.n_gc(),
            mf_dcn: self.n_mf() * cells,
            pf_pc: self.n_gc() * cells,
            pc_dcn: cells,
            cf_pc: cells,
            cf_dcn_ampa: cells,
            cf_dcn_nmda: cells,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SynapseCounts {
    pub mf_gc: usize,
    pub mf_dcn: usize,
    pub pf_pc: usize,
    pub pc_dcn: usize,
    pub cf_pc: usize,
    pub cf_dcn_ampa: usize,
    pub cf_dcn_nmda: usize,
}

impl SynapseCounts {
    pub fn total(&self) -> usize {
        self.mf_gc + self.mf_dcn + self.pf_pc + self.pc_dcn + self.cf_pc + self.cf_dcn_ampa + self.cf_dcn_nmda
    }
}

/// Mossy-fibre subgroups of one joint, in fibre order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Channel {
    ActualPosition = 0,
    ActualVelocity = 1,
    DesiredPosition = 2,
    DesiredVelocity = 3,
}

impl Channel {
    pub const ALL: [Channel; 4] =
        [Channel::ActualPosition, Channel::ActualVelocity, Channel::DesiredPosition, Channel::DesiredVelocity];
}

/// Index ranges owned by one joint's micro-complex. Ranges are local to
/// their layer; CF, PC and DCN share the same local indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointBlock {
    pub mf: [Range<usize>; 4],
    pub gc: Range<usize>,
    pub agonist: Range<usize>,
    pub antagonist: Range<usize>,
}

impl JointBlock {
    pub fn complex(&self) -> Range<usize> {
        self.agonist.start..self.antagonist.end
    }
}

/// Global id offsets of each layer. Order: MF | GC | CF | PC | DCN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerOffsets {
    pub mf: u32,
    pub gc: u32,
    pub cf: u32,
    pub pc: u32,
    pub dcn: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroComplexLayout {
    pub bins: usize,
    pub joints: Vec<JointBlock>,
    pub offsets: LayerOffsets,
}

impl MicroComplexLayout {
    pub fn new(cfg: &NetworkConfig) -> Self {
        let b = cfg.bins;
        let half = cfg.cells_per_complex / 2;
        let joints = (0..cfg.n_joints)
            .map(|j| {
                let mf0 = j * cfg.mf_per_joint();
                let gc0 = j * cfg.gc_per_joint();
                let c0 = j * cfg.cells_per_complex;
                JointBlock {
                    mf: std::array::from_fn(|s| mf0 + s * b..mf0 + (s + 1) * b),
                    gc: gc0..gc0 + cfg.gc_per_joint(),
                    agonist: c0..c0 + half,
                    antagonist: c0 + half..c0 + 2 * half,
                }
            })
            .collect();
        let mf = 0u32;
        let gc = mf + cfg.n_mf() as u32;
        let cf = gc + cfg.n_gc() as u32;
        let pc = cf + cfg.n_complex_cells() as u32;
        let dcn = pc + cfg.n_complex_cells() as u32;
        let total = dcn + cfg.n_complex_cells() as u32;
        MicroComplexLayout { bins: b, joints, offsets: LayerOffsets { mf, gc, cf, pc, dcn, total } }
    }

    /// Local MF index of `bin` in subgroup `channel` of `joint`.
    pub fn mf_index(&self, joint: usize, channel: Channel, bin: usize) -> usize {
        self.joints[joint].mf[channel as usize].start + bin
    }

    /// Local GC index addressed by the bin tuple `(a, b, c, d)` in base B.
    pub fn gc_index(&self, joint: usize, bins: [usize; 4]) -> usize {
        let b = self.bins;
        let code = ((bins[0] * b + bins[1]) * b + bins[2]) * b + bins[3];
        self.joints[joint].gc.start + code
    }

    /// Inverse of [`gc_index`](Self::gc_index): joint and bin tuple of a local GC index.
    pub fn gc_bins(&self, gc: usize) -> (usize, [usize; 4]) {
        let per = self.bins.pow(4);
        let joint = gc / per;
        let mut code = gc % per;
        let mut out = [0; 4];
        for slot in (0..4).rev() {
            out[slot] = code % self.bins;
            code /= self.bins;
        }
        (joint, out)
    }

    /// The four MF parents of a local GC index, one per subgroup.
    pub fn gc_parents(&self, gc: usize) -> [usize; 4] {
        let (joint, bins) = self.gc_bins(gc);
        std::array::from_fn(|s| self.joints[joint].mf[s].start + bins[s])
    }

    /// Joint and agonist flag of a local CF/PC/DCN index.
    pub fn complex_of(&self, cell: usize) -> Option<(usize, bool)> {
        self.joints.iter().enumerate().find_map(|(j, blk)| {
            if blk.agonist.contains(&cell) {
                Some((j, true))
            } else if blk.antagonist.contains(&cell) {
                Some((j, false))
            } else {
                None
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> NetworkConfig {
        NetworkConfig { n_joints: 2, bins: 5, cells_per_complex: 20, ..NetworkConfig::full_scale() }
    }

    #[test]
    fn full_scale_counts() {
        let cfg = NetworkConfig::full_scale();
        assert_eq!(cfg.n_mf(), 240);
        assert_eq!(cfg.n_gc(), 60_000);
        assert_eq!(cfg.n_complex_cells(), 600);
        let c = cfg.synapse_counts();
        assert_eq!(c.mf_gc, 240_000);
        assert_eq!(c.mf_dcn, 144_000);
        assert_eq!(c.pf_pc, 36_000_000);
        assert_eq!((c.pc_dcn, c.cf_pc, c.cf_dcn_ampa, c.cf_dcn_nmda), (600, 600, 600, 600));
    }

    #[test]
    fn desk_counts() {
        let cfg = desk();
        assert_eq!(cfg.n_mf(), 40);
        assert_eq!(cfg.n_gc(), 1_250);
        assert_eq!(cfg.n_complex_cells(), 40);
        assert_eq!(cfg.synapse_counts().pf_pc, 50_000);
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let mut cfg = desk();
        cfg.cells_per_complex = 21;
        assert!(cfg.validate().is_err());
        let mut cfg = desk();
        cfg.bins = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = desk();
        cfg.bins = 400;
        assert!(matches!(cfg.validate(), Err(NetError::IndexOverflow(_))));
        let mut cfg = desk();
        cfg.substep_ms = 0.3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ranges_tile_each_layer() {
        let cfg = desk();
        let lay = MicroComplexLayout::new(&cfg);
        let mut mf = vec![0u8; cfg.n_mf()];
        let mut gc = vec![0u8; cfg.n_gc()];
        let mut cells = vec![0u8; cfg.n_complex_cells()];
        for blk in &lay.joints {
            blk.mf.iter().flat_map(|r| r.clone()).for_each(|i| mf[i] += 1);
            blk.gc.clone().for_each(|i| gc[i] += 1);
            blk.agonist.clone().chain(blk.antagonist.clone()).for_each(|i| cells[i] += 1);
            assert_eq!(blk.agonist.len(), blk.antagonist.len());
            assert_eq!(blk.complex().len(), cfg.cells_per_complex);
        }
        assert!(mf.iter().chain(&gc).chain(&cells).all(|&c| c == 1));
        assert_eq!(lay.offsets.total as usize, cfg.n_mf() + cfg.n_gc() + 3 * cfg.n_complex_cells());
    }

    #[test]
    fn gc_addressing_round_trips() {
        let cfg = NetworkConfig { n_joints: 2, bins: 3, cells_per_complex: 2, ..desk() };
        let lay = MicroComplexLayout::new(&cfg);
        for gc in 0..cfg.n_gc() {
            let (j, bins) = lay.gc_bins(gc);
            assert_eq!(lay.gc_index(j, bins), gc);
        }
    }
}
