//! Drive power and window length that meet heating targets.

use qndsim::params::{CircuitSpec, Device, MembraneSpec};
use qndsim::plan::{plan_experiment, strong_coupling_boundary, PlanTargets};
use std::f64::consts::TAU;

fn main() -> qndsim::Result<()> {
    let c0 = 13e-15;
    let mut circuit = CircuitSpec::double_arm_from_rates(TAU * 7e9, TAU * 150e3, TAU * 150e3, 1e-2, 0.1, c0)?;
    circuit.stray_cs = 100.0 * c0;
    circuit.n_bar_e = Some(0.0);
    let mut membrane = MembraneSpec::new(1e-6, 0.3e-6, 10e-9, TAU * 80e6);
    membrane.x0_override = Some(1.26e-12);
    membrane.quality_q = Some(1e6);
    membrane.n_bar_m = Some(0.0);
    let (device, _) = Device::from_specs(&circuit, &membrane, 0.01)?;

    let targets = PlanTargets { delta_nb_electrical: Some(0.21), n_e: Some(1.0), window: None };
    let plan = plan_experiment(&device, &targets)?;
    println!("window              = {:.4} ms", plan.window * 1e3);
    println!("input power         = {:.3} nW", plan.p_in * 1e9);
    println!("photons per window  = {:.3e}", plan.alpha_sq_total);
    println!("intracavity photons = {:.3e}", plan.intracavity_photons);
    println!("lambda'             = {}", plan.lambda_prime);
    println!("max bath temp.      = {:.1} mK", plan.max_bath_temperature * 1e3);

    // The same device with a warm membrane, balancing electrical and bath heating.
    membrane.n_bar_m = Some(3.0);
    let (warm, _) = Device::from_specs(&circuit, &membrane, 0.01)?;
    let balanced = plan_experiment(&warm, &PlanTargets::balanced(0.3, &warm)?)?;
    println!("balanced: T = {:.4} ms, P = {:.2} nW, N_eff = {}", balanced.window * 1e3, balanced.p_in * 1e9, balanced.n_eff);

    let bare_g1 = device.couplings.g1 * (1.0 + circuit.stray_cs / c0);
    println!("strong coupling below C_s/C0 = {:.3}", strong_coupling_boundary(bare_g1, device.rates.gamma_t));
    Ok(())
}
