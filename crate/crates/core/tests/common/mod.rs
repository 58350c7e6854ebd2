//! Device fixtures shared by the integration tests and the acceptance report.
#![allow(dead_code)]

use qndsim::metrics::DriveSpec;
use qndsim::params::{derive_rates, CircuitSpec, Couplings, DerivedRates, Device, MembraneSpec, Topology};
use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Zero-point amplitude that reproduces the quoted bare coupling of the graphene device.
pub const GRAPHENE_X0: f64 = 1.26e-12;
pub const GRAPHENE_C0: f64 = 13e-15;

/// Double-arm circuit of the graphene device (7 GHz, 150 kHz), with R/Z_out as given.
pub fn graphene_circuit(r_over_zout: f64, stray_over_c0: f64) -> CircuitSpec {
    let ws = TWO_PI * 7e9;
    let gt = TWO_PI * 150e3;
    let mut c = CircuitSpec::double_arm_from_rates(ws, gt, gt, 1e-2, r_over_zout, GRAPHENE_C0).unwrap();
    c.stray_cs = stray_over_c0 * GRAPHENE_C0;
    c.n_bar_e = Some(0.0);
    c
}

/// 1 µm × 0.3 µm membrane 10 nm above the electrode, 80 MHz, Q = 10⁶.
pub fn graphene_membrane(n_bar_m: f64) -> MembraneSpec {
    let mut m = MembraneSpec::new(1e-6, 0.3e-6, 10e-9, TWO_PI * 80e6);
    m.x0_override = Some(GRAPHENE_X0);
    m.quality_q = Some(1e6);
    m.n_bar_m = Some(n_bar_m);
    m
}

/// Graphene device with C_s = 100 C₀ and g_r = g₁·`delta_g1_rel`.
pub fn graphene_device(r_over_zout: f64, delta_g1_rel: f64, n_bar_m: f64) -> Device {
    Device::from_specs(&graphene_circuit(r_over_zout, 100.0), &graphene_membrane(n_bar_m), delta_g1_rel)
        .unwrap()
        .0
}

/// Single-arm circuit used for the oracle comparison (5 GHz, γ_t = γ_r = 1 MHz, 100 MHz, γ_b = 100 Hz).
pub fn single_arm_device(g1_hz: f64) -> Device {
    let rates = DerivedRates {
        omega_s: TWO_PI * 5e9,
        omega_a: None,
        gamma_t: TWO_PI * 1e6,
        gamma_r: TWO_PI * 1e6,
        gamma_l: None,
    };
    Device::from_rates(Topology::SingleArm, rates, Couplings::new(TWO_PI * g1_hz, 0.0), TWO_PI * 100e6, TWO_PI * 100.0)
}

pub fn single_arm_drive() -> DriveSpec {
    DriveSpec::new(1e12, 100e-6)
}

/// Balanced double arm used for the Fourier solver (3 GHz, 100 kHz, 314 MHz, γ_b = 10 Hz).
pub fn fourier_device(g1_hz: f64) -> Device {
    let circ = CircuitSpec::double_arm_from_rates(TWO_PI * 3e9, TWO_PI * 100e3, TWO_PI * 100e3, 1e-4, 0.1, 1e-13).unwrap();
    let rates = derive_rates(&circ).unwrap();
    let mut dev = Device::from_rates(
        Topology::DoubleArm,
        rates,
        Couplings::new(TWO_PI * g1_hz, 0.0),
        TWO_PI * 314e6,
        TWO_PI * 10.0,
    );
    dev.z_out = circ.z_out;
    dev.parasitic_r = circ.parasitic_r;
    dev.c0 = circ.c0;
    dev
}

pub fn fourier_drive() -> DriveSpec {
    DriveSpec::from_flux(1e12, 1e-3)
}

pub const FOURIER_G1_HZ: [f64; 4] = [25e3, 50e3, 100e3, 200e3];

/// Mismatched double arm (7 GHz, 150 kHz, 80 MHz, γ_b = 80 Hz, g₁ = 7 kHz) with
/// relative mismatches (δR/R, δL/L, δC/C₀) and δg₁/g₁.
pub fn asymmetric_setup(mismatch: [f64; 3], delta_g1_rel: f64, g1_hz: f64) -> (CircuitSpec, Device) {
    let c0 = 1e-13;
    let mut circ =
        CircuitSpec::double_arm_from_rates(TWO_PI * 7e9, TWO_PI * 150e3, TWO_PI * 150e3, 1e-2, 0.1, c0).unwrap();
    let rates = derive_rates(&circ).unwrap();
    circ.delta_r = mismatch[0] * circ.parasitic_r;
    circ.delta_l = mismatch[1] * circ.parasitic_l;
    circ.delta_c = mismatch[2] * c0;
    let g1 = TWO_PI * g1_hz;
    let couplings = Couplings::new(g1, 0.0).with_asymmetry(delta_g1_rel * g1, circ.delta_c, c0);
    let mut dev = Device::from_rates(Topology::DoubleArm, rates, couplings, TWO_PI * 80e6, TWO_PI * 80.0);
    dev.z_out = circ.z_out;
    dev.parasitic_r = circ.parasitic_r;
    dev.c0 = c0;
    (circ, dev)
}

pub fn asymmetric_drive() -> DriveSpec {
    DriveSpec::from_flux(1.15e15, 1e-3)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
