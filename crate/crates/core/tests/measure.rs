//! Outcome densities, Monte-Carlo sampling and visibility estimates.

use proptest::prelude::*;
use qndsim::measure::{
    asymptotic_visibility, ks_two_peak, mc_sample_outcomes, pdf_curve, peak_weights, single_jump_cdf_raw,
    single_jump_pdf, single_jump_pdf_raw, visibility_from_histogram, visibility_from_pdf, MeasurementConfig,
    OutcomeHistogram, ValleyRule,
};

fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let inner: f64 = (1..steps).map(|k| f(lo + k as f64 * h)).sum();
    h * (inner + 0.5 * (f(lo) + f(hi)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pdf_has_unit_mass(lp in 5.0f64..2000.0, n in 0.0f64..10.0, dn in 0.01f64..1.0) {
        let cfg = MeasurementConfig::new(lp, n, dn).unwrap();
        let mass = trapezoid(|v| single_jump_pdf(v, &cfg), -12.0, cfg.snr + 12.0, 40_000);
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
    }

    #[test]
    fn cdf_is_antiderivative_of_raw_pdf(lp in 5.0f64..500.0, n in 0.0f64..5.0, dn in 0.01f64..1.0, v in -4.0f64..30.0) {
        let cfg = MeasurementConfig::new(lp, n, dn).unwrap();
        let mass = trapezoid(|x| single_jump_pdf_raw(x, &cfg), -14.0, v, 20_000);
        prop_assert!((single_jump_cdf_raw(v, &cfg) - mass).abs() < 1e-7);
    }

    #[test]
    fn weights_are_nonnegative_and_subunit(n in 0.0f64..20.0, dn in 0.0f64..3.0) {
        let w = peak_weights(n, dn);
        prop_assert!(w.ground >= 0.0 && w.excited >= 0.0 && w.bridge >= 0.0);
        prop_assert!(w.total() <= 1.0 + 1e-12);
    }

    #[test]
    fn asymptotic_visibility_increases_with_lambda(lp in 50.0f64..1e4, n in 0.0f64..5.0) {
        let a = asymptotic_visibility(lp, n).unwrap();
        let b = asymptotic_visibility(lp * 1.5, n).unwrap();
        prop_assert!(b > a && b < 1.0);
    }
}

#[test]
fn cold_weights_have_no_excited_peak() {
    let w = peak_weights(0.0, 0.3);
    assert_eq!(w.excited, 0.0);
    assert!((w.ground - (-0.3f64).exp()).abs() < 1e-15);
    assert!((w.total() - 1.0).abs() < 1e-15);
}

#[test]
fn pdf_curve_grid() {
    let cfg = MeasurementConfig::new(100.0, 1.0, 0.27).unwrap();
    let curve = pdf_curve(&cfg, -3.0, 9.0, 13);
    assert_eq!(curve.len(), 13);
    assert_eq!(curve[0].0, -3.0);
    assert_eq!(curve[12].0, 9.0);
    assert!((curve[4].0 - 1.0).abs() < 1e-15);
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(MeasurementConfig::new(0.0, 1.0, 0.2).is_err());
    assert!(MeasurementConfig::new(50.0, -1.0, 0.2).is_err());
    assert!(MeasurementConfig::new(50.0, 1.0, -0.2).is_err());
    assert!(asymptotic_visibility(1.0, 0.0).is_err());
    assert!(OutcomeHistogram::from_samples(&[0.0], 1.0, 0.0, 0.1).is_err());
}

#[test]
fn histogram_accounts_for_every_sample() {
    let values = [-5.0, -0.05, 0.0, 0.05, 0.99, 1.0, 2.0];
    let h = OutcomeHistogram::from_samples(&values, -0.1, 1.0, 0.1).unwrap();
    assert_eq!(h.bins(), 11);
    assert_eq!(h.total, 7);
    assert_eq!(h.underflow, 1);
    assert_eq!(h.overflow, 2);
    assert_eq!(h.counts.iter().sum::<u64>(), 4);
    assert!((h.density(0) - 1.0 / 0.7).abs() < 1e-9);
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let cfg = MeasurementConfig::new(80.0, 0.5, 0.3).unwrap().with_sampling(5_000, 21);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_sample_outcomes(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one.values.len(), 5_000);
    assert_eq!(one, run(4));
    let other = mc_sample_outcomes(&cfg.with_sampling(5_000, 22)).unwrap();
    assert_ne!(one.values, other.values);
}

#[test]
fn samples_follow_single_jump_density() {
    // Return jumps occur at Δn_b(1 + 1/n̄) per window; the single-jump density neglects them,
    // so compare where that rate is small.
    let cfg = MeasurementConfig::new(200.0, 2.0, 0.1).unwrap().with_sampling(40_000, 5);
    let samples = mc_sample_outcomes(&cfg).unwrap();
    let ks = ks_two_peak(&samples.values, &cfg);
    assert!(ks < 0.015, "KS distance {ks}");

    let hist = OutcomeHistogram::for_config(&samples.values, &cfg).unwrap();
    let sampled = visibility_from_histogram(&hist, cfg.snr, ValleyRule::Midpoint).unwrap();
    let analytic = visibility_from_pdf(&cfg, ValleyRule::Midpoint).unwrap();
    assert!((sampled.xi - analytic.xi).abs() < 4.0 * sampled.xi_uncertainty + 0.02, "{} vs {}", sampled.xi, analytic.xi);
    assert!(sampled.xi_uncertainty > 0.0);
}

#[test]
fn one_segment_windows_match_single_jump_density() {
    // With one segment per window at most one jump occurs, which is exactly the model.
    let mut cfg = MeasurementConfig::new(200.0, 0.0, 0.2).unwrap().with_sampling(40_000, 9);
    cfg.segments_per_window = 1;
    let samples = mc_sample_outcomes(&cfg).unwrap();
    assert!(samples.warnings.iter().any(|w| w.contains("segments_per_window")));
    assert!(ks_two_peak(&samples.values, &cfg) < 0.015);
}
