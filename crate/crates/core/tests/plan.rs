//! Δn_b optimization, experiment planning and parameter sweeps.

mod common;

use common::*;
use proptest::prelude::*;
use qndsim::params::HBAR;
use qndsim::plan::{
    analytic_visibility, evaluate_plan, optimize_delta_nb, plan_experiment, strong_coupling_boundary, sweep,
    visibility_sweep, OptimizationMethod, PlanTargets, SweepAxis, SweepTemplate, TargetRule,
};

fn template() -> SweepTemplate {
    SweepTemplate {
        circuit: graphene_circuit(0.1, 100.0),
        membrane: graphene_membrane(0.0),
        delta_g1_rel: 0.01,
        targets: TargetRule::Fixed(PlanTargets { delta_nb_electrical: Some(0.21), n_e: Some(1.0), window: None }),
        n_eff: 1.0,
        mc: None,
    }
}

#[test]
fn optimum_is_a_local_maximum() {
    for (lp, n) in [(30.0, 1.0), (100.0, 0.0), (1e3, 3.0)] {
        let r = optimize_delta_nb(lp, n, &OptimizationMethod::AnalyticPdf).unwrap();
        let x = r.delta_nb_opt;
        assert!((analytic_visibility(lp, n, x).unwrap() - r.xi_max).abs() < 1e-12);
        for f in [0.9, 1.1] {
            assert!(analytic_visibility(lp, n, x * f).unwrap() < r.xi_max);
        }
    }
    assert!(optimize_delta_nb(1.0, 1.0, &OptimizationMethod::AnalyticPdf).is_err());
    assert!(optimize_delta_nb(10.0, -1.0, &OptimizationMethod::AnalyticPdf).is_err());
}

#[test]
fn plan_targets_need_exactly_one_free_quantity() {
    let dev = graphene_device(0.1, 0.01, 0.0);
    let all = PlanTargets { delta_nb_electrical: Some(0.2), n_e: Some(1.0), window: Some(1e-4) };
    assert_eq!(plan_experiment(&dev, &all).unwrap_err().exit_code(), 2);
    let two_free = PlanTargets { delta_nb_electrical: Some(0.2), n_e: None, window: None };
    assert!(plan_experiment(&dev, &two_free).is_err());
    assert!(PlanTargets::balanced(0.3, &dev).is_err());
}

#[test]
fn balanced_plan_splits_heating_evenly() {
    let dev = graphene_device(0.1, 0.01, 3.0);
    let plan = plan_experiment(&dev, &PlanTargets::balanced(0.3, &dev).unwrap()).unwrap();
    assert!(rel(plan.delta_nb_electrical, 0.15) < 1e-9);
    assert!(rel(plan.delta_nb_mechanical, 0.15) < 1e-9);
    assert!(rel(plan.n_eff.finite().unwrap(), 6.0) < 1e-9);
}

#[test]
fn strong_coupling_boundary_matches_diluted_coupling() {
    let (g1, gt) = (TWO_PI * 715e3, TWO_PI * 150e3);
    let ratio = strong_coupling_boundary(g1, gt);
    assert!(rel(g1 / (1.0 + ratio), gt) < 1e-12);
}

#[test]
fn device_sweep_keeps_grid_order() {
    let grid = [10.0, 30.0, 100.0, 300.0];
    let table = sweep(&template(), SweepAxis::CsOverC0, &grid).unwrap();
    assert_eq!(table.rows.len(), grid.len());
    let axis = table.columns.iter().position(|c| *c == "axis_value").unwrap();
    let g1 = table.columns.iter().position(|c| *c == "g1").unwrap();
    for (row, x) in table.rows.iter().zip(grid) {
        assert!(row.error.is_none());
        assert_eq!(row.values[axis], Some(x));
    }
    let couplings: Vec<f64> = table.rows.iter().map(|r| r.values[g1].unwrap()).collect();
    assert!(couplings.windows(2).all(|w| w[1] < w[0]), "more stray capacitance, weaker coupling");

    assert!(sweep(&template(), SweepAxis::Q, &[]).is_err());
    assert!(sweep(&template(), SweepAxis::Q, &[1e5, 1e4, 1e6]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_is_self_consistent(
        r_over_z in 0.02f64..0.5,
        n_bar_m in 0.0f64..5.0,
        dn in 0.01f64..1.0,
        window in 1e-5f64..1e-3,
    ) {
        let dev = graphene_device(r_over_z, 0.01, n_bar_m);
        let plan = plan_experiment(&dev, &PlanTargets { delta_nb_electrical: Some(dn), n_e: None, window: Some(window) }).unwrap();
        prop_assert!(rel(plan.p_in / plan.flux, HBAR * dev.rates.omega_s) < 1e-12);
        prop_assert!(rel(plan.intracavity_photons * dev.rates.gamma_t, plan.flux) < 1e-12);
        prop_assert!(rel(plan.alpha_sq_total, plan.flux * window) < 1e-12);
        prop_assert!(rel(plan.delta_nb_electrical, dn) < 1e-9);
        let again = evaluate_plan(&dev, plan.flux, plan.window);
        prop_assert!(rel(again.n_e, plan.n_e) < 1e-12);
    }

    #[test]
    fn visibility_sweep_has_one_row_per_point(points in prop::collection::btree_set(2u32..2000, 1..6)) {
        let grid: Vec<f64> = points.iter().map(|&p| p as f64).collect();
        let table = visibility_sweep(&grid, 1.0, None).unwrap();
        prop_assert_eq!(table.rows.len(), grid.len());
        for (row, x) in table.rows.iter().zip(&grid) {
            prop_assert_eq!(row.values[0], Some(*x));
            prop_assert_eq!(row.values.len(), table.columns.len());
        }
    }
}
