//! Scripted perturbations: payloads, elastic bands and torque pushes,
//! switched on and off at trial boundaries.

use serde::{Deserialize, Serialize};

use super::PlantError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// Point mass (kg) at the tip from `from_trial` on.
    AttachPayload { mass: f64, from_trial: usize },
    DetachPayload { from_trial: usize },
    /// Elastic band of `stiffness` towards `anchor`. Without an anchor the
    /// band is anchored where the end effector is when it attaches, so it
    /// starts slack.
    AttachBand {
        stiffness: f64,
        #[serde(default)]
        anchor: Option<Vec<f64>>,
        from_trial: usize,
    },
    DetachBand { from_trial: usize },
    /// Torque pulse on `joint` over `[start, start + duration)` seconds after
    /// the start of each of `trials` consecutive trials from `from_trial`.
    Push {
        joint: usize,
        torque: f64,
        start: f64,
        duration: f64,
        from_trial: usize,
        #[serde(default = "one")]
        trials: usize,
    },
}

fn one() -> usize {
    1
}

impl Perturbation {
    pub fn from_trial(&self) -> usize {
        match *self {
            Perturbation::AttachPayload { from_trial, .. }
            | Perturbation::DetachPayload { from_trial }
            | Perturbation::AttachBand { from_trial, .. }
            | Perturbation::DetachBand { from_trial }
            | Perturbation::Push { from_trial, .. } => from_trial,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerturbationScript {
    pub events: Vec<Perturbation>,
}

/// What the script imposes during one trial.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptState {
    pub payload: f64,
    /// `(stiffness, anchor, attached at trial)`
    pub band: Option<(f64, Option<Vec<f64>>, usize)>,
    /// `(joint, torque, start, duration)`
    pub pushes: Vec<(usize, f64, f64, f64)>,
}

impl ScriptState {
    /// External torque on every joint at `t` seconds into the trial.
    pub fn push_torque(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(joint, torque, start, duration) in &self.pushes {
            if t >= start && t < start + duration {
                out[joint] += torque;
            }
        }
    }

    pub fn any(&self) -> bool {
        self.payload > 0.0 || self.band.is_some() || !self.pushes.is_empty()
    }
}

impl PerturbationScript {
    pub fn validate(&self, n_joints: usize, anchor_len: usize) -> Result<(), PlantError> {
        let bad = |i: usize, what: &str| Err(PlantError::InvalidConfig(format!("perturbation {i}: {what}")));
        let mut last = 0;
        for (i, e) in self.events.iter().enumerate() {
            if e.from_trial() < last {
                return bad(i, "events must be ordered by from_trial");
            }
            last = e.from_trial();
            match e {
                Perturbation::AttachPayload { mass, .. } if !(*mass >= 0.0 && mass.is_finite()) => {
                    return bad(i, "payload mass must be finite and non-negative")
                }
                Perturbation::AttachBand { stiffness, anchor, .. } => {
                    if !(*stiffness >= 0.0 && stiffness.is_finite()) {
                        return bad(i, "band stiffness must be finite and non-negative");
                    }
                    if anchor.as_ref().is_some_and(|a| a.len() != anchor_len) {
                        return bad(i, "band anchor has the wrong dimension");
                    }
                }
                Perturbation::Push { joint, torque, start, duration, .. } => {
                    if *joint >= n_joints {
                        return bad(i, "push joint out of range");
                    }
                    if !(torque.is_finite() && *start >= 0.0 && *duration >= 0.0) {
                        return bad(i, "push times must be non-negative and torque finite");
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn at_trial(&self, trial: usize) -> ScriptState {
        let mut st = ScriptState::default();
        for e in self.events.iter().filter(|e| e.from_trial() <= trial) {
            match e {
                Perturbation::AttachPayload { mass, .. } => st.payload = *mass,
                Perturbation::DetachPayload { .. } => st.payload = 0.0,
                Perturbation::AttachBand { stiffness, anchor, from_trial } => {
                    st.band = Some((*stiffness, anchor.clone(), *from_trial))
                }
                Perturbation::DetachBand { .. } => st.band = None,
                Perturbation::Push { joint, torque, start, duration, from_trial, trials } => {
                    if trial < from_trial + trials {
                        st.pushes.push((*joint, *torque, *start, *duration));
                    }
                }
            }
        }
        st
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_script_is_inert() {
        let st = PerturbationScript::default().at_trial(7);
        assert!(!st.any());
        let mut tau = [1.0, 1.0];
        st.push_torque(0.3, &mut tau);
        assert_eq!(tau, [0.0, 0.0]);
    }

    #[test]
    fn push_window_is_half_open() {
        let script = PerturbationScript {
            events: vec![Perturbation::Push { joint: 1, torque: 2.0, start: 0.5, duration: 0.1, from_trial: 3, trials: 1 }],
        };
        assert!(script.at_trial(2).pushes.is_empty());
        assert!(script.at_trial(4).pushes.is_empty());
        let st = script.at_trial(3);
        let mut tau = [0.0; 2];
        for (t, want) in [(0.49, 0.0), (0.5, 2.0), (0.55, 2.0), (0.5999, 2.0), (0.6, 0.0)] {
            st.push_torque(t, &mut tau);
            assert_eq!(tau, [0.0, want], "t = {t}");
        }
    }

    #[test]
    fn attach_detach_sequence() {
        let script = PerturbationScript {
            events: vec![
                Perturbation::AttachPayload { mass: 0.5, from_trial: 10 },
                Perturbation::AttachBand { stiffness: 20.0, anchor: None, from_trial: 12 },
                Perturbation::DetachPayload { from_trial: 20 },
                Perturbation::DetachBand { from_trial: 25 },
            ],
        };
        script.validate(2, 2).unwrap();
        assert_eq!(script.at_trial(9).payload, 0.0);
        assert_eq!(script.at_trial(10).payload, 0.5);
        assert_eq!(script.at_trial(12).band, Some((20.0, None, 12)));
        assert_eq!(script.at_trial(20).payload, 0.0);
        assert!(script.at_trial(24).band.is_some());
        assert!(!script.at_trial(25).any());
    }

    #[test]
    fn unordered_script_rejected() {
        let script = PerturbationScript {
            events: vec![Perturbation::DetachPayload { from_trial: 5 }, Perturbation::DetachBand { from_trial: 4 }],
        };
        assert!(script.validate(2, 2).is_err());
    }
}
