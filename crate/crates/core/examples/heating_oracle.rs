//! Exact covariance propagation of a single-arm circuit compared with the closed-form heating.

use qndsim::dynamics::covariance::{covariance_evolve, rlc_initial_state, rlc_model};
use qndsim::dynamics::uniform_grid;
use qndsim::metrics::{phonon_trajectory_analytic, DriveSpec, Trajectory};
use qndsim::params::{Couplings, DerivedRates, Device, Topology};
use std::f64::consts::TAU;

fn main() -> qndsim::Result<()> {
    let rates = DerivedRates {
        omega_s: TAU * 5e9,
        omega_a: None,
        gamma_t: TAU * 1e6,
        gamma_r: TAU * 1e6,
        gamma_l: None,
    };
    let device = Device::from_rates(Topology::SingleArm, rates, Couplings::new(TAU * 10.0, 0.0), TAU * 100e6, TAU * 100.0);
    let drive = DriveSpec::new(1e12, 100e-6);

    let times = uniform_grid(10e-3, 11);
    let model = rlc_model(&drive, &device)?;
    let sim = covariance_evolve(&model, &rlc_initial_state(&device, 0.0), &times)?;
    let exact = phonon_trajectory_analytic(&times, Trajectory::RlcExact, 0.0, &drive, &device)?;

    println!("{:>10} {:>14} {:>14}", "t [ms]", "simulated", "closed form");
    for ((t, s), e) in times.iter().zip(&sim.n_b).zip(&exact) {
        println!("{:>10.2} {s:>14.6e} {e:>14.6e}", t * 1e3);
    }
    println!("steady state {}, T_half {:?} s", sim.n_b_steady, sim.t_half);
    Ok(())
}
