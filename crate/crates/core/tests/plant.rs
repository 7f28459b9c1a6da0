//! Plant dynamics against energy, rigid-body and decoupling oracles.

use cerebellar::plant::{
    supervise, JointState, Overlay, Plant, PlantConfig, PlantKind, PlantState, SeaJointParams, SupervisorParams,
    TwoLinkParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 0.0005;

fn undamped() -> PlantConfig {
    let mut cfg = PlantConfig::default();
    for j in &mut cfg.joints {
        j.b_m = 0.0;
        j.b_l = 0.0;
    }
    cfg
}

/// Energy of the two-link SEA arm from the centre-of-mass velocities of
/// each link, written out independently of the library's inertia matrix.
fn energy_from_points(cfg: &PlantConfig, s: &PlantState) -> f64 {
    let l = &cfg.links;
    let (a, b) = (&s.joints[0], &s.joints[1]);
    let (w1, w12) = (a.q_dot, a.q_dot + b.q_dot);
    let (s1, c1) = a.q.sin_cos();
    let (s12, c12) = (a.q + b.q).sin_cos();
    let lc1 = l.l1 / 2.0;
    let lc2 = l.l2 / 2.0;
    let v1 = [-lc1 * s1 * w1, lc1 * c1 * w1];
    let v2 = [-l.l1 * s1 * w1 - lc2 * s12 * w12, l.l1 * c1 * w1 + lc2 * c12 * w12];
    let i1 = l.m1 * l.l1 * l.l1 / 12.0;
    let i2 = l.m2 * l.l2 * l.l2 / 12.0;
    let mut e = 0.5 * l.m1 * (v1[0] * v1[0] + v1[1] * v1[1])
        + 0.5 * i1 * w1 * w1
        + 0.5 * l.m2 * (v2[0] * v2[0] + v2[1] * v2[1])
        + 0.5 * i2 * w12 * w12;
    for (p, j) in cfg.joints.iter().zip(&s.joints) {
        e += 0.5 * p.j_l * j.q_dot * j.q_dot + 0.5 * p.j_m * j.theta_dot * j.theta_dot;
        e += 0.5 * p.k_s * (j.theta - j.q).powi(2);
    }
    e
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> PlantState {
    PlantState {
        joints: (0..n)
            .map(|_| {
                let q = rng.random_range(-1.0..1.0);
                JointState {
                    q,
                    theta: q + rng.random_range(-0.05..0.05),
                    q_dot: rng.random_range(-2.0..2.0),
                    theta_dot: rng.random_range(-2.0..2.0),
                }
            })
            .collect(),
    }
}

#[test]
fn undamped_arm_conserves_energy_over_ten_seconds() {
    let cfg = undamped();
    let z = [0.0; 2];
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s0 = random_state(&mut rng, 2);
        let e0 = energy_from_points(&cfg, &s0);
        let mut plant = Plant::new(cfg.clone(), s0).unwrap();
        assert!((plant.energy() - e0).abs() <= 1e-12 * e0);
        let mut worst = 0.0f64;
        for _ in 0..(10.0 / DT) as usize {
            plant.step(&z, &z, DT).unwrap();
            worst = worst.max((energy_from_points(&cfg, plant.state()) / e0 - 1.0).abs());
        }
        assert!(worst < 1e-3, "seed {seed}: energy drift {worst}");
    }
}

#[test]
fn stiff_spring_approaches_the_rigid_body() {
    let p = SeaJointParams { k_s: 1e4, b_m: 0.0, b_l: 0.0, ..Default::default() };
    let cfg = PlantConfig { model: PlantKind::Decoupled, joints: vec![p], ..Default::default() };
    let tau = 0.5;
    let mut plant = Plant::new(cfg, PlantState::at_rest(&[0.0])).unwrap();
    let t = 0.5;
    for _ in 0..(t / DT) as usize {
        plant.step(&[tau], &[0.0], DT).unwrap();
    }
    // average acceleration over the run, robust to the fast spring ringing
    let a = 2.0 * plant.state().joints[0].q / (t * t);
    let rigid = tau / (p.j_m + p.j_l);
    assert!((a / rigid - 1.0).abs() < 0.02, "{a} vs {rigid}");
}

#[test]
fn massless_distal_link_decouples_the_arm() {
    // with m2 = 0 every coupling term vanishes and link 1 carries a1 = I1 + m1·lc1²
    let links = TwoLinkParams { m2: 0.0, ..Default::default() };
    let two = PlantConfig { links, ..Default::default() };
    let a1 = links.m1 * links.l1 * links.l1 / 12.0 + links.m1 * (links.l1 / 2.0).powi(2);
    let mut joints = two.joints.clone();
    joints[0].j_l += a1;
    let dec = PlantConfig { model: PlantKind::Decoupled, joints, ..Default::default() };

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s0 = PlantState::at_rest(&[0.2, -0.4]);
    let mut a = Plant::new(two, s0.clone()).unwrap();
    let mut b = Plant::new(dec, s0).unwrap();
    let z = [0.0; 2];
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let tau = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        for _ in 0..4 {
            a.step(&tau, &z, DT).unwrap();
            b.step(&tau, &z, DT).unwrap();
        }
        for (x, y) in a.state().joints.iter().zip(&b.state().joints) {
            let scale = y.q.abs().max(y.q_dot.abs()).max(1e-3);
            worst = worst.max((x.q - y.q).abs() / scale).max((x.q_dot - y.q_dot).abs() / scale);
        }
    }
    assert!(worst < 0.01, "relative state error {worst}");
}

#[test]
fn damped_joints_never_gain_energy() {
    let z3 = [0.0; 3];
    let decoupled = PlantConfig { model: PlantKind::Decoupled, joints: vec![SeaJointParams::default(); 3], ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for cfg in [decoupled, PlantConfig::default()] {
        let n = cfg.n_joints();
        let mut plant = Plant::new(cfg, random_state(&mut rng, n)).unwrap();
        let mut e = plant.energy();
        for _ in 0..4000 {
            plant.step(&z3[..n], &z3[..n], DT).unwrap();
            let next = plant.energy();
            assert!(next <= e * (1.0 + 1e-12), "{next} > {e}");
            e = next;
        }
    }
}

#[test]
fn decoupled_joints_do_not_depend_on_their_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let joints: Vec<SeaJointParams> =
        (0..3).map(|k| SeaJointParams { k_s: 50.0 + 40.0 * k as f64, j_l: 0.01 * (k + 1) as f64, ..Default::default() }).collect();
    let s = random_state(&mut rng, 3);
    let tau = [0.3, -0.2, 0.1];
    let fwd = PlantConfig { model: PlantKind::Decoupled, joints: joints.clone(), ..Default::default() };
    let rev = PlantConfig { model: PlantKind::Decoupled, joints: joints.iter().rev().copied().collect(), ..Default::default() };
    let mut a = Plant::new(fwd, s.clone()).unwrap();
    let mut b = Plant::new(rev, PlantState { joints: s.joints.iter().rev().copied().collect() }).unwrap();
    let rt: Vec<f64> = tau.iter().rev().copied().collect();
    for _ in 0..100 {
        a.step(&tau, &[0.0; 3], DT).unwrap();
        b.step(&rt, &[0.0; 3], DT).unwrap();
    }
    let back: Vec<JointState> = b.state().joints.iter().rev().copied().collect();
    assert_eq!(a.state().joints, back);
}

#[test]
fn band_anchored_at_the_tip_starts_slack() {
    let cfg = PlantConfig::default();
    let q = [0.4, 0.9];
    let tip = cerebellar::plant::end_effector(&cfg.links, q);
    let mut plant = Plant::new(cfg, PlantState::at_rest(&q)).unwrap();
    plant.overlay = Overlay { payload: 0.0, band: Some(cerebellar::plant::Band { stiffness: 200.0, anchor: tip.to_vec() }) };
    let acc = plant.acceleration(&[0.0; 2], &[0.0; 2]).unwrap();
    assert!(acc.iter().all(|d| d.q_dot.abs() < 1e-12));
}

proptest! {
    #[test]
    fn supervisor_is_silent_inside_the_range(q in -3.0f64..=3.0, q_dot in -50.0f64..50.0, tau in -10.0f64..10.0) {
        let joints = [SeaJointParams::default()];
        let state = PlantState { joints: vec![JointState { q, q_dot, theta: q, theta_dot: 0.0 }] };
        let mut t = [tau];
        supervise(&state, &mut t, &joints, &SupervisorParams::default());
        prop_assert_eq!(t[0], tau);
    }

    #[test]
    fn supervisor_pushes_back_outside_the_range(over in 1e-6f64..2.0, tau in -10.0f64..10.0) {
        let joints = [SeaJointParams::default()];
        let params = SupervisorParams::default();
        for (q, sign) in [(3.0 + over, -1.0), (-3.0 - over, 1.0)] {
            let state = PlantState { joints: vec![JointState { q, q_dot: 0.0, theta: q, theta_dot: 0.0 }] };
            let mut t = [tau];
            supervise(&state, &mut t, &joints, &params);
            prop_assert!(((t[0] - tau) - sign * params.k_sup * over).abs() < 1e-9);
        }
    }
}
