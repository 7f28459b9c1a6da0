//! Plant equations of motion and their RK4 integration.
//!
//! Every joint is a series-elastic actuator:
//!
//! ```text
//! j_m·θ̈ = τ_cmd − b_m·θ̇ − k_s·(θ − q)
//! ```
//!
//! In the decoupled model each link obeys `j_l·q̈ = k_s·(θ − q) − b_l·q̇ + τ_ext`.
//! In the two-link model the spring torques drive planar arm dynamics
//! `(M(q) + diag(j_l))·q̈ + c(q, q̇) = k_s·(θ − q) − b_l·q̇ + τ_ext`. With
//! `sea = false` the motor is rigidly attached to the link.

use serde::{Deserialize, Serialize};

use super::PlantError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeaJointParams {
    /// Motor-side inertia, kg·m².
    pub j_m: f64,
    /// Extra link-side inertia, kg·m². The whole link inertia in the decoupled model.
    pub j_l: f64,
    /// Spring stiffness, N·m/rad.
    pub k_s: f64,
    /// Motor damping, N·m·s/rad.
    pub b_m: f64,
    /// Link damping, N·m·s/rad.
    pub b_l: f64,
    /// Working range, rad.
    pub q_lo: f64,
    pub q_hi: f64,
}

impl Default for SeaJointParams {
    fn default() -> Self {
        SeaJointParams { j_m: 0.01, j_l: 0.005, k_s: 100.0, b_m: 0.1, b_l: 0.1, q_lo: -3.0, q_hi: 3.0 }
    }
}

impl SeaJointParams {
    fn validate(&self, j: usize) -> Result<(), PlantError> {
        let bad = |what: &str| Err(PlantError::InvalidConfig(format!("joint {j}: {what}")));
        if !(self.j_m > 0.0 && self.j_l >= 0.0) {
            return bad("inertias must be positive");
        }
        if !(self.k_s > 0.0) {
            return bad("stiffness must be positive");
        }
        if !(self.b_m >= 0.0 && self.b_l >= 0.0) {
            return bad("damping must be non-negative");
        }
        if !(self.q_lo < self.q_hi) {
            return bad("q_lo must be below q_hi");
        }
        Ok(())
    }
}

/// Planar two-link arm. Centres of mass and inertias default to uniform rods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoLinkParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: Option<f64>,
    pub lc2: Option<f64>,
    pub i1: Option<f64>,
    pub i2: Option<f64>,
}

impl Default for TwoLinkParams {
    fn default() -> Self {
        TwoLinkParams { m1: 2.0, m2: 1.0, l1: 0.3, l2: 0.3, lc1: None, lc2: None, i1: None, i2: None }
    }
}

impl TwoLinkParams {
    pub fn lc1(&self) -> f64 {
        self.lc1.unwrap_or(self.l1 / 2.0)
    }
    pub fn lc2(&self) -> f64 {
        self.lc2.unwrap_or(self.l2 / 2.0)
    }
    pub fn i1(&self) -> f64 {
        self.i1.unwrap_or(self.m1 * self.l1 * self.l1 / 12.0)
    }
    pub fn i2(&self) -> f64 {
        self.i2.unwrap_or(self.m2 * self.l2 * self.l2 / 12.0)
    }

    /// Inertia constants `(a1, a2, a3)` with a point payload at the tip:
    /// `M11 = a1 + 2·a3·cos q2`, `M12 = a2 + a3·cos q2`, `M22 = a2`.
    pub fn inertia_constants(&self, payload: f64) -> [f64; 3] {
        let (l1, l2, lc1, lc2) = (self.l1, self.l2, self.lc1(), self.lc2());
        let a1 = self.i1() + self.i2() + self.m1 * lc1 * lc1 + self.m2 * (l1 * l1 + lc2 * lc2);
        let a2 = self.i2() + self.m2 * lc2 * lc2;
        let a3 = self.m2 * l1 * lc2;
        [a1 + payload * (l1 * l1 + l2 * l2), a2 + payload * l2 * l2, a3 + payload * l1 * l2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    Decoupled,
    TwoLink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub model: PlantKind,
    pub joints: Vec<SeaJointParams>,
    pub links: TwoLinkParams,
    /// Series-elastic joints; otherwise the motor drives the link rigidly.
    pub sea: bool,
    /// In-plane gravity, m/s² (two-link only).
    pub gravity: [f64; 2],
    /// Decoupled model: a payload adds `mass·lever²` to the last link.
    pub payload_lever: f64,
    /// Integration step, s.
    pub substep_s: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            model: PlantKind::TwoLink,
            joints: vec![SeaJointParams::default(); 2],
            links: TwoLinkParams::default(),
            sea: true,
            gravity: [0.0, 0.0],
            payload_lever: 0.3,
            substep_s: 0.0005,
        }
    }
}

impl PlantConfig {
    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if self.joints.is_empty() {
            return Err(PlantError::InvalidConfig("at least one joint is required".into()));
        }
        for (j, p) in self.joints.iter().enumerate() {
            p.validate(j)?;
        }
        if !(self.substep_s > 0.0) {
            return Err(PlantError::InvalidConfig("substep_s must be positive".into()));
        }
        if self.model == PlantKind::TwoLink {
            if self.joints.len() != 2 {
                return Err(PlantError::InvalidConfig("the two-link model needs exactly 2 joints".into()));
            }
            let l = &self.links;
            if !(l.m1 >= 0.0 && l.m2 >= 0.0 && l.l1 > 0.0 && l.l2 > 0.0) {
                return Err(PlantError::InvalidConfig("link masses must be >= 0 and lengths > 0".into()));
            }
            if l.i1() < 0.0 || l.i2() < 0.0 {
                return Err(PlantError::InvalidConfig("link inertias must be >= 0".into()));
            }
        }
        if !self.gravity.iter().all(|g| g.is_finite()) || !self.payload_lever.is_finite() {
            return Err(PlantError::InvalidConfig("gravity and payload_lever must be finite".into()));
        }
        Ok(())
    }
}

/// An elastic band pulling the end effector (two-link) or each joint
/// (decoupled) towards `anchor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    /// N/m (two-link) or N·m/rad (decoupled).
    pub stiffness: f64,
    /// Cartesian point (two-link) or joint angles (decoupled).
    pub anchor: Vec<f64>,
}

/// Parameter changes imposed by the perturbation script.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overlay {
    /// Point mass at the tip, kg.
    pub payload: f64,
    pub band: Option<Band>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    /// Motor angle, rad.
    pub theta: f64,
    /// Link angle, rad.
    pub q: f64,
    pub theta_dot: f64,
    pub q_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub joints: Vec<JointState>,
}

impl PlantState {
    /// At rest with motor and link aligned at `q`.
    pub fn at_rest(q: &[f64]) -> Self {
        PlantState { joints: q.iter().map(|&q| JointState { theta: q, q, ..Default::default() }).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.joints.iter().all(|s| s.theta.is_finite() && s.q.is_finite() && s.theta_dot.is_finite() && s.q_dot.is_finite())
    }
}

/// End-effector position of the two-link arm.
pub fn end_effector(links: &TwoLinkParams, q: [f64; 2]) -> [f64; 2] {
    let (q1, q12) = (q[0], q[0] + q[1]);
    [links.l1 * q1.cos() + links.l2 * q12.cos(), links.l1 * q1.sin() + links.l2 * q12.sin()]
}

/// `∂p/∂q` of the end effector, row-major.
pub fn jacobian(links: &TwoLinkParams, q: [f64; 2]) -> [[f64; 2]; 2] {
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    [[-links.l1 * s1 - links.l2 * s12, -links.l2 * s12], [links.l1 * c1 + links.l2 * c12, links.l2 * c12]]
}

/// Link-side inertia matrix `M(q) + diag(j_l)` of the two-link arm.
pub fn link_inertia(cfg: &PlantConfig, payload: f64, q2: f64) -> [[f64; 2]; 2] {
    let [a1, a2, a3] = cfg.links.inertia_constants(payload);
    let c2 = q2.cos();
    let (e1, e2) = link_extra(cfg);
    [[a1 + 2.0 * a3 * c2 + e1, a2 + a3 * c2], [a2 + a3 * c2, a2 + e2]]
}

/// Additional diagonal link inertia: `j_l`, plus `j_m` when rigid.
fn link_extra(cfg: &PlantConfig) -> (f64, f64) {
    let extra = |p: &SeaJointParams| if cfg.sea { p.j_l } else { p.j_l + p.j_m };
    (extra(&cfg.joints[0]), extra(&cfg.joints[1]))
}

/// Kinetic plus spring plus band energy, J. Gravity is not included.
pub fn mechanical_energy(cfg: &PlantConfig, overlay: &Overlay, state: &PlantState) -> f64 {
    let mut e = 0.0;
    if cfg.sea {
        for (p, s) in cfg.joints.iter().zip(&state.joints) {
            e += 0.5 * p.j_m * s.theta_dot * s.theta_dot + 0.5 * p.k_s * (s.theta - s.q).powi(2);
        }
    }
    match cfg.model {
        PlantKind::Decoupled => {
            let n = cfg.joints.len();
            for (j, (p, s)) in cfg.joints.iter().zip(&state.joints).enumerate() {
                let mut inertia = if cfg.sea { p.j_l } else { p.j_l + p.j_m };
                if j + 1 == n {
                    inertia += overlay.payload * cfg.payload_lever * cfg.payload_lever;
                }
                e += 0.5 * inertia * s.q_dot * s.q_dot;
                if let Some(b) = &overlay.band {
                    e += 0.5 * b.stiffness * (b.anchor[j] - s.q).powi(2);
                }
            }
        }
        PlantKind::TwoLink => {
            let (s0, s1) = (&state.joints[0], &state.joints[1]);
            let m = link_inertia(cfg, overlay.payload, s1.q);
            let v = [s0.q_dot, s1.q_dot];
            e += 0.5 * (m[0][0] * v[0] * v[0] + 2.0 * m[0][1] * v[0] * v[1] + m[1][1] * v[1] * v[1]);
            if let Some(b) = &overlay.band {
                let p = end_effector(&cfg.links, [s0.q, s1.q]);
                e += 0.5 * b.stiffness * ((b.anchor[0] - p[0]).powi(2) + (b.anchor[1] - p[1]).powi(2));
            }
        }
    }
    e
}

/// Time derivative of the full state.
fn derivative(
    cfg: &PlantConfig,
    overlay: &Overlay,
    x: &[JointState],
    tau_cmd: &[f64],
    tau_ext: &[f64],
    dx: &mut [JointState],
) -> Result<(), PlantError> {
    let n = x.len();
    // net torque reaching each link from its actuator
    let mut drive = [0.0f64; 2];
    let link_force = |j: usize, p: &SeaJointParams, s: &JointState, d: &mut JointState| -> f64 {
        if cfg.sea {
            let spring = p.k_s * (s.theta - s.q);
            d.theta = s.theta_dot;
            d.theta_dot = (tau_cmd[j] - p.b_m * s.theta_dot - spring) / p.j_m;
            spring - p.b_l * s.q_dot + tau_ext[j]
        } else {
            tau_cmd[j] - (p.b_m + p.b_l) * s.q_dot + tau_ext[j]
        }
    };
    match cfg.model {
        PlantKind::Decoupled => {
            for j in 0..n {
                let (p, s) = (&cfg.joints[j], &x[j]);
                let mut f = link_force(j, p, s, &mut dx[j]);
                let mut inertia = if cfg.sea { p.j_l } else { p.j_l + p.j_m };
                if j + 1 == n {
                    inertia += overlay.payload * cfg.payload_lever * cfg.payload_lever;
                }
                if let Some(b) = &overlay.band {
                    f += b.stiffness * (b.anchor[j] - s.q);
                }
                if !(inertia > 0.0) {
                    return Err(PlantError::Singular(inertia));
                }
                dx[j].q = s.q_dot;
                dx[j].q_dot = f / inertia;
                if !cfg.sea {
                    dx[j].theta = s.q_dot;
                    dx[j].theta_dot = dx[j].q_dot;
                }
            }
        }
        PlantKind::TwoLink => {
            for j in 0..2 {
                drive[j] = link_force(j, &cfg.joints[j], &x[j], &mut dx[j]);
            }
            let q = [x[0].q, x[1].q];
            let v = [x[0].q_dot, x[1].q_dot];
            let [_, _, a3] = cfg.links.inertia_constants(overlay.payload);
            let h = a3 * q[1].sin();
            // Coriolis and centrifugal torques moved to the right-hand side
            let mut rhs = [drive[0] + h * (2.0 * v[0] * v[1] + v[1] * v[1]), drive[1] - h * v[0] * v[0]];
            if let Some(b) = &overlay.band {
                let p = end_effector(&cfg.links, q);
                let f = [b.stiffness * (b.anchor[0] - p[0]), b.stiffness * (b.anchor[1] - p[1])];
                let jac = jacobian(&cfg.links, q);
                rhs[0] += jac[0][0] * f[0] + jac[1][0] * f[1];
                rhs[1] += jac[0][1] * f[0] + jac[1][1] * f[1];
            }
            if cfg.gravity != [0.0, 0.0] {
                let g = gravity_torque(&cfg.links, overlay.payload, q, cfg.gravity);
                rhs[0] += g[0];
                rhs[1] += g[1];
            }
            let m = link_inertia(cfg, overlay.payload, q[1]);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if !(det.abs() > 1e-12) {
                return Err(PlantError::Singular(det));
            }
            let acc = [(m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det, (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det];
            for j in 0..2 {
                dx[j].q = v[j];
                dx[j].q_dot = acc[j];
                if !cfg.sea {
                    dx[j].theta = v[j];
                    dx[j].theta_dot = acc[j];
                }
            }
        }
    }
    Ok(())
}

/// Joint torques of the link weights under the in-plane gravity vector `g`.
fn gravity_torque(l: &TwoLinkParams, payload: f64, q: [f64; 2], g: [f64; 2]) -> [f64; 2] {
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    // τ = Σ Jcᵀ·m·g over the two centres of mass and the tip payload
    let dot = |jx: f64, jy: f64| jx * g[0] + jy * g[1];
    let (lc1, lc2) = (l.lc1(), l.lc2());
    let t1 = l.m1 * dot(-lc1 * s1, lc1 * c1)
        + l.m2 * dot(-l.l1 * s1 - lc2 * s12, l.l1 * c1 + lc2 * c12)
        + payload * dot(-l.l1 * s1 - l.l2 * s12, l.l1 * c1 + l.l2 * c12);
    let t2 = l.m2 * dot(-lc2 * s12, lc2 * c12) + payload * dot(-l.l2 * s12, l.l2 * c12);
    [t1, t2]
}

fn axpy(out: &mut [JointState], x: &[JointState], h: f64, d: &[JointState]) {
    for ((o, x), d) in out.iter_mut().zip(x).zip(d) {
        o.theta = x.theta + h * d.theta;
        o.q = x.q + h * d.q;
        o.theta_dot = x.theta_dot + h * d.theta_dot;
        o.q_dot = x.q_dot + h * d.q_dot;
    }
}

/// One classical RK4 step of length `dt` seconds with torques held constant.
pub fn step_plant(
    cfg: &PlantConfig,
    overlay: &Overlay,
    state: &PlantState,
    tau_cmd: &[f64],
    tau_ext: &[f64],
    dt: f64,
) -> Result<PlantState, PlantError> {
    let mut plant = Plant::new(cfg.clone(), state.clone())?;
    plant.overlay = overlay.clone();
    plant.step(tau_cmd, tau_ext, dt)?;
    Ok(plant.state)
}

/// A plant instance with reusable integration buffers.
#[derive(Debug, Clone)]
pub struct Plant {
    cfg: PlantConfig,
    pub overlay: Overlay,
    state: PlantState,
    k: [Vec<JointState>; 4],
    tmp: Vec<JointState>,
}

impl Plant {
    pub fn new(cfg: PlantConfig, state: PlantState) -> Result<Self, PlantError> {
        cfg.validate()?;
        let n = cfg.n_joints();
        if state.joints.len() != n {
            return Err(PlantError::JointCount { expected: n, got: state.joints.len() });
        }
        let z = vec![JointState::default(); n];
        Ok(Plant { cfg, overlay: Overlay::default(), state, k: [z.clone(), z.clone(), z.clone(), z.clone()], tmp: z })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn set_state(&mut self, state: PlantState) {
        assert_eq!(state.joints.len(), self.cfg.n_joints());
        self.state = state;
    }

    pub fn energy(&self) -> f64 {
        mechanical_energy(&self.cfg, &self.overlay, &self.state)
    }

    pub fn step(&mut self, tau_cmd: &[f64], tau_ext: &[f64], dt: f64) -> Result<(), PlantError> {
        let n = self.cfg.n_joints();
        for got in [tau_cmd.len(), tau_ext.len()] {
            if got != n {
                return Err(PlantError::JointCount { expected: n, got });
            }
        }
        if let Some(b) = &self.overlay.band {
            let need = if self.cfg.model == PlantKind::TwoLink { 2 } else { n };
            if b.anchor.len() != need {
                return Err(PlantError::JointCount { expected: need, got: b.anchor.len() });
            }
        }
        let (cfg, ov, x) = (&self.cfg, &self.overlay, &self.state.joints);
        let [k1, k2, k3, k4] = &mut self.k;
        derivative(cfg, ov, x, tau_cmd, tau_ext, k1)?;
        axpy(&mut self.tmp, x, 0.5 * dt, k1);
        derivative(cfg, ov, &self.tmp, tau_cmd, tau_ext, k2)?;
        axpy(&mut self.tmp, x, 0.5 * dt, k2);
        derivative(cfg, ov, &self.tmp, tau_cmd, tau_ext, k3)?;
        axpy(&mut self.tmp, x, dt, k3);
        derivative(cfg, ov, &self.tmp, tau_cmd, tau_ext, k4)?;
        let w = dt / 6.0;
        for (j, s) in self.state.joints.iter_mut().enumerate() {
            s.theta += w * (k1[j].theta + 2.0 * k2[j].theta + 2.0 * k3[j].theta + k4[j].theta);
            s.q += w * (k1[j].q + 2.0 * k2[j].q + 2.0 * k3[j].q + k4[j].q);
            s.theta_dot += w * (k1[j].theta_dot + 2.0 * k2[j].theta_dot + 2.0 * k3[j].theta_dot + k4[j].theta_dot);
            s.q_dot += w * (k1[j].q_dot + 2.0 * k2[j].q_dot + 2.0 * k3[j].q_dot + k4[j].q_dot);
        }
        if !self.state.is_finite() {
            return Err(PlantError::NonFinite);
        }
        Ok(())
    }

    /// Link acceleration at the current state, for inspection.
    pub fn acceleration(&self, tau_cmd: &[f64], tau_ext: &[f64]) -> Result<Vec<JointState>, PlantError> {
        let mut d = vec![JointState::default(); self.cfg.n_joints()];
        derivative(&self.cfg, &self.overlay, &self.state.joints, tau_cmd, tau_ext, &mut d)?;
        Ok(d)
    }
}
