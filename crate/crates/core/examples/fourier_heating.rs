//! Heating of a balanced double-arm circuit from the Fourier-space solver.

use qndsim::dynamics::fourier::{fourier_heating_solve, FourierTruncation};
use qndsim::dynamics::uniform_grid;
use qndsim::metrics::{combined_steady_state, DriveSpec};
use qndsim::params::{derive_rates, CircuitSpec, Couplings, Device, Topology};
use std::f64::consts::TAU;

fn main() -> qndsim::Result<()> {
    let circuit = CircuitSpec::double_arm_from_rates(TAU * 3e9, TAU * 100e3, TAU * 100e3, 1e-4, 0.1, 1e-13)?;
    let rates = derive_rates(&circuit)?;
    let drive = DriveSpec::from_flux(1e12, 1e-3);
    let trunc = FourierTruncation::default();

    println!("{:>10} {:>14} {:>14} {:>12}", "g1 [kHz]", "T_half sim", "T_half formula", "n_inf sim");
    for g1_hz in [50e3, 100e3, 200e3] {
        let mut device =
            Device::from_rates(Topology::DoubleArm, rates, Couplings::new(TAU * g1_hz, 0.0), TAU * 314e6, TAU * 10.0);
        device.z_out = circuit.z_out;
        device.parasitic_r = circuit.parasitic_r;
        device.c0 = circuit.c0;

        let (_, t_half) = combined_steady_state(&drive, &device, false)?;
        let t_half = t_half.finite().unwrap_or(f64::NAN);
        let end = (5.0 * t_half).min(0.999 * trunc.resolved_period(&drive, &device));
        let sol = fourier_heating_solve(&drive, &device, &trunc, &uniform_grid(end, 41), 0.0, false)?;
        println!(
            "{:>10.0} {:>14.4e} {:>14.4e} {:>12}",
            g1_hz / 1e3,
            sol.solution.t_half.unwrap_or(f64::NAN),
            t_half,
            sol.solution.n_b_steady
        );
    }
    Ok(())
}
