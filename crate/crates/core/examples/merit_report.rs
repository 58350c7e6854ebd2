//! Figures of merit of a graphene drum in a double-arm circuit.
//!
//! Run with `cargo run --example merit_report`.

use qndsim::metrics::{merit_report, DriveSpec};
use qndsim::params::{CircuitSpec, Device, MembraneSpec};
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

    let (device, warnings) = Device::from_specs(&circuit, &membrane, 0.01)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let report = merit_report(&DriveSpec::new(4.5e11, 0.4e-3), &device);

    println!("g1 / 2pi         = {:.1} Hz", device.couplings.g1 / TAU);
    println!("lambda           = {}", report.lambda);
    println!("lambda_b         = {}", report.lambda_b);
    println!("lambda_p         = {}", report.lambda_p);
    println!("(D/sigma)^2      = {:.3}", report.d_sq);
    println!("delta n_b        = {:.4}", report.delta_nb_total);
    println!("probe damping    = {:.3} 1/s", report.gamma_b_tilde);
    println!("two-phonon rate  = {:.3e} 1/s", report.two_phonon_rate);
    Ok(())
}
