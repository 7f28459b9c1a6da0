//! Reference trajectories in joint space.
//!
//! Cartesian tasks (circle, figure eight, centre-out reaching) are mapped
//! through the two-link inverse kinematics on a fixed elbow branch; velocities
//! come from the inverse Jacobian, so they are exact derivatives of the
//! sampled positions.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::plant::{jacobian, TwoLinkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Circle,
    Eight,
    Reach,
    JointSines,
}

/// Sign of the elbow angle chosen by the inverse kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elbow {
    /// `q2 > 0`
    Up,
    /// `q2 < 0`
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    /// Circle radius, half-width of the eight and reach distance, m.
    pub radius: f64,
    /// Trial duration, s.
    pub period: f64,
    /// Centre of the circle and start of every reach, m.
    pub center: [f64; 2],
    pub elbow: Elbow,
    /// Number of evenly spaced reach targets.
    pub reach_targets: usize,
    /// Joint sinusoids `offset + amplitude·sin(2πt/period + phase)`, rad.
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            kind: TrajectoryKind::Circle,
            radius: 0.12,
            period: 2.0,
            center: [0.0, 0.4],
            elbow: Elbow::Up,
            reach_targets: 8,
            amplitudes: Vec::new(),
            phases: Vec::new(),
            offsets: Vec::new(),
        }
    }
}

/// Why a trajectory cannot be followed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("period must be positive")]
    Period,
    #[error("radius must be positive")]
    Radius,
    #[error("reach needs at least one target")]
    NoTargets,
    #[error("point ({0:.4}, {1:.4}) m is outside the arm's workspace (reach {2:.4}..{3:.4} m)")]
    Unreachable(f64, f64, f64, f64),
    #[error("{0} trajectories need a two-joint arm")]
    NeedsTwoJoints(&'static str),
    #[error("joint sinusoids need amplitudes, phases and offsets for all {0} joints")]
    SineShape(usize),
}

/// Minimum-jerk position fraction and its derivative w.r.t. `s`.
#[inline]
pub fn min_jerk(s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    let (s2, s3) = (s * s, s * s * s);
    (s3 * (10.0 - 15.0 * s + 6.0 * s2), s2 * (30.0 - 60.0 * s + 30.0 * s2))
}

/// Joint angles placing the end effector at `p`.
pub fn inverse_kinematics(links: &TwoLinkParams, p: [f64; 2], elbow: Elbow) -> Result<[f64; 2], TrajectoryError> {
    let (l1, l2) = (links.l1, links.l2);
    let r2 = p[0] * p[0] + p[1] * p[1];
    let (lo, hi) = ((l1 - l2).abs(), l1 + l2);
    let r = r2.sqrt();
    // the boundary itself is a kinematic singularity
    if !(r > lo && r < hi) {
        return Err(TrajectoryError::Unreachable(p[0], p[1], lo, hi));
    }
    let c2 = ((r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let q2 = match elbow {
        Elbow::Up => c2.acos(),
        Elbow::Down => -c2.acos(),
    };
    let q1 = p[1].atan2(p[0]) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
    Ok([q1, q2])
}

/// `J⁻¹·v`
fn joint_velocity(links: &TwoLinkParams, q: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    let j = jacobian(links, q);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    [(j[1][1] * v[0] - j[0][1] * v[1]) / det, (j[0][0] * v[1] - j[1][0] * v[0]) / det]
}

/// A validated trajectory ready for sampling.
#[derive(Debug, Clone)]
pub struct Trajectory {
    spec: TrajectorySpec,
    links: TwoLinkParams,
    n_joints: usize,
    /// Joint angles of the reach centre and of each target.
    reach: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn new(spec: &TrajectorySpec, links: &TwoLinkParams, n_joints: usize) -> Result<Self, TrajectoryError> {
        if !(spec.period > 0.0) {
            return Err(TrajectoryError::Period);
        }
        let mut traj = Trajectory { spec: spec.clone(), links: *links, n_joints, reach: Vec::new() };
        match spec.kind {
            TrajectoryKind::JointSines => {
                if [&spec.amplitudes, &spec.phases, &spec.offsets].iter().any(|v| v.len() != n_joints) {
                    return Err(TrajectoryError::SineShape(n_joints));
                }
                return Ok(traj);
            }
            kind => {
                if !(spec.radius > 0.0) {
                    return Err(TrajectoryError::Radius);
                }
                if n_joints != 2 {
                    return Err(TrajectoryError::NeedsTwoJoints(match kind {
                        TrajectoryKind::Circle => "circle",
                        TrajectoryKind::Eight => "eight",
                        _ => "reach",
                    }));
                }
            }
        }
        if spec.kind == TrajectoryKind::Reach {
            if spec.reach_targets == 0 {
                return Err(TrajectoryError::NoTargets);
            }
            traj.reach.push(inverse_kinematics(links, spec.center, spec.elbow)?);
            for k in 0..spec.reach_targets {
                let a = TAU * k as f64 / spec.reach_targets as f64;
                let p = [spec.center[0] + spec.radius * a.cos(), spec.center[1] + spec.radius * a.sin()];
                traj.reach.push(inverse_kinematics(links, p, spec.elbow)?);
            }
            return Ok(traj);
        }
        // every point of a closed Cartesian path must be reachable
        for i in 0..=2000 {
            let phi = TAU * i as f64 / 2000.0;
            inverse_kinematics(links, traj.cartesian(phi).0, spec.elbow)?;
        }
        Ok(traj)
    }

    pub fn spec(&self) -> &TrajectorySpec {
        &self.spec
    }

    pub fn n_joints(&self) -> usize {
        self.n_joints
    }

    /// Number of distinct trial variants (reach targets; 1 otherwise).
    pub fn variants(&self) -> usize {
        if self.spec.kind == TrajectoryKind::Reach {
            self.spec.reach_targets
        } else {
            1
        }
    }

    /// Cartesian position and velocity at phase `phi` (per unit phase rate).
    fn cartesian(&self, phi: f64) -> ([f64; 2], [f64; 2]) {
        let (r, c) = (self.spec.radius, self.spec.center);
        match self.spec.kind {
            TrajectoryKind::Eight => {
                let p = [c[0] + 0.5 * r * (2.0 * phi).sin(), c[1] + r * phi.cos()];
                (p, [r * (2.0 * phi).cos(), -r * phi.sin()])
            }
            _ => ([c[0] + r * phi.cos(), c[1] + r * phi.sin()], [-r * phi.sin(), r * phi.cos()]),
        }
    }

    /// Desired `(q, q̇)` per joint at `t` seconds into a trial of variant `target`.
    pub fn sample(&self, t: f64, target: usize, out: &mut [(f64, f64)]) {
        let period = self.spec.period;
        let w = TAU / period;
        match self.spec.kind {
            TrajectoryKind::Circle | TrajectoryKind::Eight => {
                let (p, dp) = self.cartesian(w * t);
                let q = inverse_kinematics(&self.links, p, self.spec.elbow)
                    .expect("trajectory was validated at construction");
                let qd = joint_velocity(&self.links, q, [w * dp[0], w * dp[1]]);
                out[0] = (q[0], qd[0]);
                out[1] = (q[1], qd[1]);
            }
            TrajectoryKind::Reach => {
                let half = period / 2.0;
                let (q0, qf) = (self.reach[0], self.reach[1 + target % self.spec.reach_targets]);
                let (s, sign) = if t < half { (t / half, 1.0) } else { ((t - half) / half, -1.0) };
                let (f, df) = min_jerk(s);
                for j in 0..2 {
                    let d = qf[j] - q0[j];
                    out[j] = if sign > 0.0 { (q0[j] + d * f, d * df / half) } else { (qf[j] - d * f, -d * df / half) };
                }
            }
            TrajectoryKind::JointSines => {
                let s = &self.spec;
                for (j, o) in out.iter_mut().enumerate().take(self.n_joints) {
                    let arg = w * t + s.phases[j];
                    *o = (s.offsets[j] + s.amplitudes[j] * arg.sin(), s.amplitudes[j] * w * arg.cos());
                }
            }
        }
    }

    /// Sample a whole trial of `steps` points spaced `dt` seconds, joint-major.
    pub fn table(&self, target: usize, steps: usize, dt: f64) -> Vec<Vec<(f64, f64)>> {
        let mut rows = vec![vec![(0.0, 0.0); steps]; self.n_joints];
        let mut buf = vec![(0.0, 0.0); self.n_joints];
        for i in 0..steps {
            self.sample(i as f64 * dt, target, &mut buf);
            for j in 0..self.n_joints {
                rows[j][i] = buf[j];
            }
        }
        rows
    }

    /// Per-joint `[min, max]` of desired position and the largest |velocity|
    /// over every variant, from a dense sampling.
    pub fn envelope(&self) -> Vec<([f64; 2], f64)> {
        let mut env = vec![([f64::INFINITY, f64::NEG_INFINITY], 0.0f64); self.n_joints];
        let mut buf = vec![(0.0, 0.0); self.n_joints];
        for v in 0..self.variants() {
            for i in 0..=4000 {
                self.sample(self.spec.period * i as f64 / 4000.0 * (1.0 - 1e-12), v, &mut buf);
                for (e, &(q, qd)) in env.iter_mut().zip(&buf) {
                    e.0[0] = e.0[0].min(q);
                    e.0[1] = e.0[1].max(q);
                    e.1 = e.1.max(qd.abs());
                }
            }
        }
        env
    }
}
