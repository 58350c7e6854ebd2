//! Extra heating caused by mismatched arms, from the stroboscopic simulation.

use qndsim::dynamics::unbalanced::{unbalanced_simulate, UnbalancedOptions};
use qndsim::metrics::DriveSpec;
use qndsim::params::{derive_rates, CircuitSpec, Couplings, Device, Topology};
use std::f64::consts::TAU;

fn main() -> qndsim::Result<()> {
    let c0 = 1e-13;
    let drive = DriveSpec::from_flux(1.15e15, 1e-3);
    let options = UnbalancedOptions { steps_per_period: 400 };

    println!("{:>8} {:>8} {:>8} {:>12} {:>14}", "dR/R", "dL/L", "dC/C0", "g_r/g1", "rate [1/s]");
    for [dr, dl, dc] in [[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.005], [0.0, 0.0, 0.02]] {
        let mut circuit = CircuitSpec::double_arm_from_rates(TAU * 7e9, TAU * 150e3, TAU * 150e3, 1e-2, 0.1, c0)?;
        let rates = derive_rates(&circuit)?;
        circuit.delta_r = dr * circuit.parasitic_r;
        circuit.delta_l = dl * circuit.parasitic_l;
        circuit.delta_c = dc * c0;

        let g1 = TAU * 7e3;
        let couplings = Couplings::new(g1, 0.0).with_asymmetry(0.0, circuit.delta_c, c0);
        let mut device = Device::from_rates(Topology::DoubleArm, rates, couplings, TAU * 80e6, TAU * 80.0);
        device.z_out = circuit.z_out;
        device.parasitic_r = circuit.parasitic_r;
        device.c0 = c0;

        let sol = unbalanced_simulate(&circuit, &device, &drive, &[0.0, 2e-4], 0.0, &options)?;
        println!(
            "{dr:>8} {dl:>8} {dc:>8} {:>12.4e} {:>14.4e}",
            device.couplings.g_r / g1,
            sol.solution.heating_rate
        );
    }
    Ok(())
}
