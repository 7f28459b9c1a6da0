//! Transport delays of the closed loop, checked by step index.

mod oracles;

use cerebellar::control::{ExperimentConfig, LoopConfig};

#[test]
fn impulse_is_applied_after_25_steps_and_sensed_after_50() {
    let cfg = ExperimentConfig::default();
    let at = 100;
    let (moved, sensed) = oracles::impulse_latency(&cfg, at);
    // applied during step at + 25, so the state at the start of the next
    // step is the first to differ
    assert_eq!(moved, at as usize + 25 + 1);
    assert_eq!(sensed, at as usize + 50);
    let round_trip_ms = (sensed - at as usize) as f64 * 2.0;
    assert_eq!(round_trip_ms, 100.0);
}

#[test]
fn delays_follow_the_configuration() {
    let cfg = ExperimentConfig {
        loop_: LoopConfig { delay_efferent_ms: 10.0, delay_afferent_ms: 30.0, ..LoopConfig::default() },
        ..ExperimentConfig::default()
    };
    assert_eq!(oracles::impulse_latency(&cfg, 7), (7 + 5 + 1, 7 + 20));
}

#[test]
fn zero_delays_close_the_loop_within_one_step() {
    let cfg = ExperimentConfig {
        loop_: LoopConfig { delay_efferent_ms: 0.0, delay_afferent_ms: 0.0, ..LoopConfig::default() },
        ..ExperimentConfig::default()
    };
    assert_eq!(oracles::impulse_latency(&cfg, 3), (4, 4));
}

#[test]
fn delays_must_be_whole_control_steps() {
    let cfg = ExperimentConfig {
        loop_: LoopConfig { delay_efferent_ms: 3.0, ..LoopConfig::default() },
        ..ExperimentConfig::default()
    };
    assert!(cfg.validate().is_err());
}
