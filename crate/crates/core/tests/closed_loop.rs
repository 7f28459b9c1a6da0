//! Closed-loop properties: the error metric, transport, determinism and
//! the baselines.

use cerebellar::control::{
    mae, run_experiment, run_pd_baseline, ClosedLoop, ControllerKind, DelayLine, ExperimentConfig, LoopConfig, PdGains,
    Silent, Task, TrialRecord,
};
use cerebellar::net::{NetworkConfig, PlasticityParams};
use proptest::prelude::*;

/// A cheap cerebellar loop: tiny network, short trials.
fn small(seed: u64) -> ExperimentConfig {
    let base = ExperimentConfig::default();
    ExperimentConfig {
        seed,
        network: NetworkConfig { bins: 5, cells_per_complex: 4, ..base.network.clone() },
        loop_: LoopConfig { steps_per_trial: 250, ..LoopConfig::default() },
        ..base
    }
}

fn maes(recs: &[TrialRecord]) -> Vec<f64> {
    recs.iter().map(|r| r.mean_mae).collect()
}

proptest! {
    #[test]
    fn mae_of_identical_series_is_zero(xs in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let (per, mean) = mae(&[xs.clone(), xs.clone()], &[xs.clone(), xs]);
        prop_assert_eq!(per, vec![0.0, 0.0]);
        prop_assert_eq!(mean, 0.0);
    }

    #[test]
    fn mae_of_constant_offset_is_the_offset(xs in prop::collection::vec(-5.0f64..5.0, 1..200), c in -2.0f64..2.0) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let (per, mean) = mae(&[xs], &[shifted]);
        prop_assert!((per[0] - c.abs()).abs() < 1e-9);
        prop_assert!((mean - c.abs()).abs() < 1e-9);
    }

    #[test]
    fn delay_lines_lose_and_reorder_nothing(depth in 0usize..40, items in prop::collection::vec(any::<i32>(), 0..200)) {
        let mut line = DelayLine::new(depth, i64::MIN);
        let out: Vec<i64> = items.iter().map(|&x| line.exchange(x as i64)).collect();
        let lead = depth.min(items.len());
        prop_assert!(out[..lead].iter().all(|&x| x == i64::MIN));
        let passed: Vec<i64> = items.iter().map(|&x| x as i64).take(items.len() - lead).collect();
        prop_assert_eq!(&out[lead..], &passed[..]);
    }
}

#[test]
fn mae_averages_joints() {
    let (per, mean) = mae(&[vec![0.0, 0.0], vec![1.0, 1.0]], &[vec![1.0, -1.0], vec![1.0, 1.5]]);
    assert_eq!(per, vec![1.0, 0.25]);
    assert_eq!(mean, 0.625);
}

#[test]
fn equal_seeds_reproduce_bit_for_bit() {
    let cfg = ExperimentConfig { n_trials: 3, ..small(7) };
    let a = run_experiment(&cfg, &mut Silent).unwrap();
    let b = run_experiment(&cfg, &mut Silent).unwrap();
    assert_eq!(a, b);
    let c = run_experiment(&ExperimentConfig { seed: 8, ..cfg }, &mut Silent).unwrap();
    assert_ne!(maes(&a), maes(&c));
}

#[test]
fn reach_targets_are_seeded_and_cover_all_eight() {
    let cfg = ExperimentConfig { task: Task::Reach, controller: ControllerKind::None, n_trials: 80, ..small(3) };
    let targets = |cfg: &ExperimentConfig| -> Vec<usize> {
        run_experiment(cfg, &mut Silent).unwrap().iter().map(|r| r.target.unwrap()).collect()
    };
    let a = targets(&cfg);
    assert_eq!(a, targets(&cfg));
    for t in 0..8 {
        assert!(a.contains(&t), "target {t} never drawn");
    }
    assert_ne!(a, targets(&ExperimentConfig { seed: 4, ..cfg }));
}

#[test]
fn zero_gain_pd_is_the_uncontrolled_plant() {
    let cfg = ExperimentConfig { n_trials: 3, ..small(1) };
    let pd = run_pd_baseline(&cfg, 3, &PdGains { kp: vec![0.0; 2], kd: vec![0.0; 2] }).unwrap();
    let off = run_experiment(&ExperimentConfig { controller: ControllerKind::None, ..cfg }, &mut Silent).unwrap();
    assert_eq!(maes(&pd), maes(&off));
    assert!(pd.iter().all(|r| !r.plastic));
}

#[test]
fn pd_baseline_does_not_learn() {
    let cfg = ExperimentConfig { loop_: LoopConfig::default(), ..small(1) };
    let recs = run_pd_baseline(&cfg, 12, &cfg.baseline).unwrap();
    let settled = maes(&recs[2..]);
    let mean = settled.iter().sum::<f64>() / settled.len() as f64;
    assert!(settled.iter().all(|m| (m / mean - 1.0).abs() < 0.02), "{settled:?}");
}

#[test]
fn pd_beats_the_uncontrolled_plant() {
    let cfg = ExperimentConfig { loop_: LoopConfig::default(), ..small(1) };
    let pd = run_pd_baseline(&cfg, 5, &cfg.baseline).unwrap();
    let off = run_experiment(&ExperimentConfig { controller: ControllerKind::None, n_trials: 5, ..cfg }, &mut Silent).unwrap();
    assert!(pd[4].mean_mae < off[4].mean_mae, "{} vs {}", pd[4].mean_mae, off[4].mean_mae);
}

#[test]
fn frozen_network_gives_stationary_error() {
    let cfg = ExperimentConfig {
        loop_: LoopConfig { freeze_from_trial: Some(0), ..LoopConfig::default() },
        n_trials: 55,
        ..small(5)
    };
    let mut lp = ClosedLoop::new(&cfg).unwrap();
    let before = lp.network().unwrap().weights().as_slice().to_vec();
    let recs = lp.run_trials(cfg.n_trials, &mut Silent).unwrap();
    assert!(recs.iter().all(|r| !r.plastic));
    assert_eq!(lp.network().unwrap().weights().as_slice(), &before[..]);
    let m = maes(&recs[5..]);
    let mean = m.iter().sum::<f64>() / m.len() as f64;
    let sd = (m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m.len() as f64).sqrt();
    assert!(sd / mean < 0.10, "coefficient of variation {}", sd / mean);
}

#[test]
fn aggressive_learning_keeps_weights_in_bounds() {
    for (alpha, beta) in [(0.5, -0.01), (0.001, -2.0)] {
        let cfg = ExperimentConfig {
            plasticity: PlasticityParams { alpha_ltp: alpha, beta_ltd: beta, ..PlasticityParams::default() },
            n_trials: 3,
            ..small(2)
        };
        let mut lp = ClosedLoop::new(&cfg).unwrap();
        lp.run_trials(3, &mut Silent).unwrap();
        let (lo, hi) = lp.network().unwrap().weights().range();
        assert!(lo >= 0.0 && hi <= 5.0, "({lo}, {hi})");
        assert!(lo == 0.0 || hi == 5.0, "rates this large should reach a bound");
    }
}

#[test]
fn continuous_operation_keeps_state_across_trials() {
    let cfg = small(1);
    let mut lp = ClosedLoop::new(&cfg).unwrap();
    lp.run_trial(&mut Silent).unwrap();
    let end = lp.plant().state().clone();
    let mut again = ClosedLoop::new(&cfg).unwrap();
    again.run_trial(&mut Silent).unwrap();
    assert_eq!(again.plant().state(), &end);
    // the second trial starts where the first ended
    let first_q0 = lp.trajectory().table(0, 1, 0.002)[0][0].0;
    assert_ne!(end.joints[0].q, first_q0);
}
