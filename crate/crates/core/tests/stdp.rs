//! PF-PC plasticity kernel and eligibility traces.

mod oracles;

use cerebellar::net::{kernel_value, ltd_on_cf_spike, EligibilityTraces, PfPcWeights, PlasticityParams};
use proptest::prelude::*;

fn defaults() -> PlasticityParams {
    PlasticityParams::default()
}

#[test]
fn kernel_peaks_at_one_at_tau_ltd() {
    let p = defaults();
    assert!((kernel_value(-p.tau_ltd, &p) - 1.0).abs() <= 1e-9);
    // and nowhere higher
    let max = (0..20_000).map(|i| kernel_value(-(p.d_k + i as f64 * 0.01), &p)).fold(0.0, f64::max);
    assert!(max <= 1.0 + 1e-12);
}

#[test]
fn kernel_is_zero_at_and_after_the_dead_time() {
    let p = defaults();
    for lag in [-p.d_k, -p.d_k + 1e-9, -50.0, -1.0, 0.0, 1.0, 250.0, f64::MAX] {
        assert_eq!(kernel_value(lag, &p), 0.0, "lag {lag}");
    }
}

proptest! {
    #[test]
    fn kernel_vanishes_for_every_lag_past_dead_time(lag in -70.0f64..1e6) {
        prop_assert_eq!(kernel_value(lag, &defaults()), 0.0);
    }

    #[test]
    fn kernel_is_non_negative(lag in -1e4f64..1e4) {
        prop_assert!(kernel_value(lag, &defaults()) >= 0.0);
    }
}

#[test]
fn traces_match_direct_convolution_on_random_trains() {
    let p = defaults();
    let mut worst = 0.0f64;
    for seed in 0..100 {
        // 4 fibres for 1 s at 5 to 100 Hz
        let rate = 5.0 + seed as f64 * 0.95;
        let trains = oracles::random_trains(4, 2000, rate, seed);
        worst = worst.max(oracles::trace_vs_convolution(&p, &trains, 4));
    }
    assert!(worst <= 1e-6, "worst relative deviation {worst}");
}

#[test]
fn traces_match_convolution_for_other_kernel_shapes() {
    let p = PlasticityParams { tau_ltd: 60.0, d_k: 20.0, ..defaults() };
    let trains = oracles::random_trains(3, 3000, 40.0, 99);
    assert!(oracles::trace_vs_convolution(&p, &trains, 3) <= 1e-6);
}

#[test]
fn dead_time_must_be_whole_substeps() {
    let p = PlasticityParams { d_k: 70.25, ..defaults() };
    assert!(EligibilityTraces::new(1, &p, 0.5).is_err());
}

#[test]
fn ltd_scales_with_kernel_weight_of_history() {
    // one PF spike 130 ms before the CF: eligibility 2/e
    let p = defaults();
    let mut tr = EligibilityTraces::new(2, &p, 0.5).unwrap();
    tr.advance(&[1]);
    for _ in 0..260 {
        tr.advance(&[]);
    }
    let mut w = PfPcWeights::filled(2, 3, 1.6);
    ltd_on_cf_spike(2, &tr, &mut w, &p);
    let expect = 1.6 + p.beta_ltd * 2.0 * (-1.0f64).exp();
    assert!((w.get(1, 2) - expect).abs() < 1e-12, "{}", w.get(1, 2));
    assert_eq!(w.get(1, 0), 1.6);
    assert_eq!(w.get(0, 2), 1.6);
}
