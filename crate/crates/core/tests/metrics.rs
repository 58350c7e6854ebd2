//! Device resolution and closed-form figures of merit.

mod common;

use common::*;
use proptest::prelude::*;
use qndsim::metrics::{delta_nb, lambda_family, lambda_prime_and_occupation, merit_report, DriveSpec, HeatingBudget};
use qndsim::params::{apply_stray_capacitance, bose_occupation, couplings_from_x0, residual_coupling, Couplings};
use qndsim::Extended;

#[test]
fn graphene_device_figures() {
    let dev = graphene_device(0.1, 0.01, 0.0);
    assert!(rel(dev.couplings.g1 / TWO_PI, 7.08e3) < 0.01);
    assert!(rel(dev.couplings.g_r, 0.01 * dev.couplings.g1) < 1e-12);
    let fam = lambda_family(&dev);
    assert!(rel(fam.lambda.finite().unwrap(), 121.58) < 1e-3);

    let report = merit_report(&DriveSpec::new(4.5e11, 4e-4), &dev);
    assert!(rel(report.delta_nb_total, 0.199) < 0.01);
    // D² from the full reflection coefficient matches λ·Δn_b to leading order in g/γ.
    let predicted = report.lambda.finite().unwrap() * report.delta_nb_total;
    assert!(rel(report.d_sq, predicted) < 1e-4, "{} vs {predicted}", report.d_sq);
}

#[test]
fn stray_capacitance_dilutes_every_coupling() {
    let bare = couplings_from_x0(GRAPHENE_X0, 10e-9, TWO_PI * 7e9).with_asymmetry(50.0, 0.0, GRAPHENE_C0);
    let c = apply_stray_capacitance(bare, GRAPHENE_C0, 3.0 * GRAPHENE_C0);
    for (a, b) in [(c.g1, bare.g1), (c.g2, bare.g2), (c.g_r, bare.g_r), (c.delta_g1, bare.delta_g1)] {
        assert!(rel(a, b / 4.0) < 1e-15);
    }
}

#[test]
fn residual_coupling_terms() {
    assert_eq!(residual_coupling(1e3, 0.0, 0.0, 1e-13), 0.0);
    assert!(rel(residual_coupling(1e3, 0.0, 1e-15, 1e-13), 20.0) < 1e-12);
    assert!(rel(residual_coupling(1e3, 10.0, 0.0, 1e-13), 10.0) < 1e-12);
}

#[test]
fn bose_occupation_limits() {
    assert_eq!(bose_occupation(TWO_PI * 1e9, 0.0), 0.0);
    // k_B T = 100 ħω gives n ≈ k_B T/ħω − 1/2.
    let hbar_over_kb = 7.638_232_577e-12;
    let w = TWO_PI * 80e6;
    let t = 100.0 * hbar_over_kb * w;
    assert!((bose_occupation(w, t) - 99.5).abs() < 1e-3);
}

#[test]
fn unbounded_lambda_when_no_residual_coupling() {
    let mut dev = graphene_device(0.1, 0.0, 0.0);
    dev.couplings = Couplings::new(dev.couplings.g1, dev.couplings.g2);
    let fam = lambda_family(&dev);
    assert_eq!(fam.lambda_p, Extended::Infinite);
    assert_eq!(fam.lambda, fam.lambda_b);
}

#[test]
fn bath_renormalization() {
    let budget = HeatingBudget { probe: 0.2, residual: 0.05, mechanical: 0.25 };
    let r = lambda_prime_and_occupation(Extended::Finite(100.0), &budget, 2.0, 1e-3, 10.0, 0.0);
    assert!(rel(r.lambda_prime.finite().unwrap(), 50.0) < 1e-15);
    assert!(rel(r.n_eff.finite().unwrap(), 4.0) < 1e-15);
    assert!(rel(r.n_e.finite().unwrap(), 25.0) < 1e-12);
}

proptest! {
    #[test]
    fn lambda_is_harmonic_combination(r_over_z in 0.01f64..1.0, dg in 1e-3f64..0.2, cs in 1.0f64..300.0) {
        let mut circ = graphene_circuit(r_over_z, cs);
        circ.n_bar_e = Some(0.0);
        let dev = qndsim::params::Device::from_specs(&circ, &graphene_membrane(0.0), dg).unwrap().0;
        let fam = lambda_family(&dev);
        let (b, p) = (fam.lambda_b.finite().unwrap(), fam.lambda_p.finite().unwrap());
        prop_assert!(rel(fam.lambda.finite().unwrap(), 1.0 / (1.0 / b + 1.0 / p)) < 1e-12);
        prop_assert!(fam.lambda.finite().unwrap() <= b.min(p));
    }

    #[test]
    fn merit_scales_linearly_with_drive(
        r_over_z in 0.01f64..1.0,
        dg in 1e-3f64..0.1,
        photons in 1e9f64..1e13,
        window in 1e-5f64..1e-3,
        k in 0.1f64..10.0,
    ) {
        let dev = graphene_device(r_over_z, dg, 0.0);
        let drive = DriveSpec::new(photons, window);
        let (a, b) = (merit_report(&drive, &dev), merit_report(&drive.scaled(k), &dev));
        prop_assert!(rel(b.d_sq, k * a.d_sq) < 1e-12);
        prop_assert!(rel(b.delta_nb_electrical, k * a.delta_nb_electrical) < 1e-12);
        prop_assert!(rel(b.lambda.finite().unwrap(), a.lambda.finite().unwrap()) < 1e-12);
    }

    #[test]
    fn heating_budget_adds_up(n_bar_m in 0.0f64..10.0, photons in 1e9f64..1e13) {
        let dev = graphene_device(0.1, 0.01, n_bar_m);
        let drive = DriveSpec::new(photons, 4e-4);
        let budget = delta_nb(&drive, &dev);
        prop_assert!(rel(budget.mechanical + 1e-300, dev.gamma_b * n_bar_m * 4e-4 + 1e-300) < 1e-12);
        let report = merit_report(&drive, &dev);
        prop_assert!(rel(report.delta_nb_total, budget.total()) < 1e-12);
        prop_assert!(report.lambda_prime.finite().unwrap() <= report.lambda.finite().unwrap() * (1.0 + 1e-12));
    }
}
