//! Closed-form figures of merit: reflection coefficient, homodyne signal and noise,
//! signal-to-noise, heating rates, phonon-number increments and the λ family.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::params::{Device, Topology, HBAR};

/// Probe drive over one measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    /// Photon number |α|² sent during the window.
    pub alpha_sq: f64,
    /// Measurement time T, s.
    pub window: f64,
    /// Homodyne phase θ, rad.
    pub theta: f64,
    /// Probe angular frequency; `None` means on resonance with the symmetric mode.
    pub probe_frequency: Option<f64>,
}

impl DriveSpec {
    /// Drive from a photon number and window, phase quadrature, on resonance.
    pub fn new(alpha_sq: f64, window: f64) -> Self {
        DriveSpec {
            alpha_sq,
            window,
            theta: PI,
            probe_frequency: None,
        }
    }

    /// Drive from a constant photon flux |α̃|².
    pub fn from_flux(flux: f64, window: f64) -> Self {
        Self::new(flux * window, window)
    }

    /// Resolves the optional pair (|α|², flux) against T; both given must agree to 1e-6.
    pub fn resolve(alpha_sq: Option<f64>, flux: Option<f64>, window: f64) -> Result<Self> {
        if !(window > 0.0) {
            return Err(Error::config("drive.measurement_time", "must be > 0"));
        }
        let a = match (alpha_sq, flux) {
            (Some(a), Some(f)) => {
                let implied = f * window;
                if (a - implied).abs() > 1e-6 * a.abs().max(implied.abs()) {
                    return Err(Error::config(
                        "drive.photon_number",
                        format!("photon number {a:e} inconsistent with flux x time = {implied:e}"),
                    ));
                }
                a
            }
            (Some(a), None) => a,
            (None, Some(f)) => f * window,
            (None, None) => 0.0,
        };
        if !(a >= 0.0) {
            return Err(Error::config("drive.photon_number", "must be >= 0"));
        }
        Ok(Self::new(a, window))
    }

    pub fn flux(&self) -> f64 {
        self.alpha_sq / self.window
    }

    /// Same window and phase with the photon number scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        DriveSpec {
            alpha_sq: self.alpha_sq * c,
            ..*self
        }
    }
}

/// Quadratic-coupling frequency pull. The split capacitor doubles it, which is what makes
/// d²/σ² agree with the double-arm signal-to-noise prefactor.
fn quadratic_pull(device: &Device) -> f64 {
    let g2 = device.couplings.g2;
    match device.topology {
        Topology::SingleArm => g2,
        Topology::DoubleArm => 2.0 * g2,
    }
}

/// Reflection coefficient ζ(Ω, n_b) of the probed mode.
pub fn reflection_coefficient(omega: f64, n_b: u32, device: &Device) -> Complex64 {
    let r = &device.rates;
    let shift = quadratic_pull(device) * r.omega_s * n_b as f64;
    let den = Complex64::new(omega * (r.gamma_r + r.gamma_t), -(omega * omega - r.omega_s * r.omega_s - shift));
    Complex64::new(2.0 * r.gamma_t * omega, 0.0) / den
}

/// Mean homodyne voltage and its standard deviation for a Fock state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSignal {
    pub mean: f64,
    pub sigma: f64,
}

/// Output-line voltage scale √(ħ ω_s Z_out / 2).
fn voltage_scale(device: &Device) -> f64 {
    (HBAR * device.rates.omega_s * device.z_out / 2.0).sqrt()
}

/// Homodyne mean V_M and noise σ at phase θ for `n_b` phonons.
pub fn homodyne_signal(n_b: u32, drive: &DriveSpec, device: &Device) -> HomodyneSignal {
    let omega = drive.probe_frequency.unwrap_or(device.rates.omega_s);
    let zeta = reflection_coefficient(omega, n_b, device);
    let scale = voltage_scale(device);
    let alpha = drive.alpha_sq.sqrt();
    let reflected = zeta - Complex64::new(1.0, 0.0);
    let projected = project(reflected, drive.theta);
    HomodyneSignal {
        mean: alpha * scale * projected,
        sigma: scale * (1.0 + 2.0 * device.n_bar_e).sqrt(),
    }
}

/// Projection of the reflected amplitude onto the measured quadrature; θ = π gives −Im ζ.
fn project(reflected: Complex64, theta: f64) -> f64 {
    -(reflected * Complex64::from_polar(1.0, theta - PI)).im
}

/// Peak separation d = V_M(1) − V_M(0).
pub fn signal_distance(drive: &DriveSpec, device: &Device) -> f64 {
    homodyne_signal(1, drive, device).mean - homodyne_signal(0, drive, device).mean
}

/// Signal-to-noise D² = (d/σ)² in closed form.
pub fn snr_squared(drive: &DriveSpec, device: &Device) -> f64 {
    let r = &device.rates;
    let g2 = device.couplings.g2;
    let kappa = r.kappa();
    let pre = match device.topology {
        Topology::SingleArm => 4.0,
        Topology::DoubleArm => 16.0,
    };
    let k = g2 * g2 + kappa * kappa;
    pre * g2 * g2 * drive.alpha_sq * r.gamma_t * r.gamma_t / ((1.0 + 2.0 * device.n_bar_e) * k * k)
}

/// Heating rate Γ_b of the single-arm circuit, and of the residual coupling g in the double arm.
fn linear_heating(g: f64, drive: &DriveSpec, device: &Device) -> f64 {
    let r = &device.rates;
    let kappa = r.kappa();
    4.0 * g * g * drive.alpha_sq * r.gamma_t
        / (drive.window * kappa * (kappa * kappa + 4.0 * device.omega_m * device.omega_m))
}

/// Γ_b for the single-arm circuit.
pub fn induced_heating_rlc(drive: &DriveSpec, device: &Device) -> f64 {
    linear_heating(device.couplings.g1, drive, device)
}

/// Γ̃_b: the single-arm heating form evaluated at the residual coupling g_r.
pub fn residual_heating(drive: &DriveSpec, device: &Device) -> f64 {
    linear_heating(device.couplings.g_r, drive, device)
}

/// Frequency-dependent decay and shift induced through the antisymmetric mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleArmHeating {
    pub gamma_b: f64,
    pub omega_shift: f64,
}

fn require_double(device: &Device) -> Result<(f64, f64)> {
    match (device.topology, device.rates.omega_a, device.rates.gamma_l) {
        (Topology::DoubleArm, Some(wa), Some(gl)) => Ok((wa, gl)),
        _ => Err(Error::Domain("operation requires the double-arm topology".into())),
    }
}

/// Γ_b(Ω) and ω_b(Ω) of the balanced double arm at an arbitrary frequency Ω.
pub fn induced_heating_double(omega: f64, drive: &DriveSpec, device: &Device) -> Result<DoubleArmHeating> {
    let (wa, gl) = require_double(device)?;
    let r = &device.rates;
    let ws = r.omega_s;
    let pref = r.gamma_t / (drive.window * ws) * (drive.alpha_sq * device.couplings.g1.powi(2) * wa * wa) / r.kappa().powi(2);
    let branch = |x: f64| Complex64::new(1.0, 0.0) / Complex64::new(x * x - wa * wa, gl * x);
    let s = branch(omega - ws) + branch(omega + ws);
    let i = Complex64::new(0.0, 1.0);
    Ok(DoubleArmHeating {
        gamma_b: (4.0 * i * pref * s).re,
        omega_shift: (2.0 * i * pref * s).im,
    })
}

/// Γ_b in the limit ω_a ≫ ω_s ≫ ω_m.
pub fn double_heating_limit(drive: &DriveSpec, device: &Device) -> Result<DoubleArmHeating> {
    let (wa, gl) = require_double(device)?;
    let r = &device.rates;
    let k2 = r.kappa().powi(2);
    let g1sq_a = device.couplings.g1.powi(2) * drive.alpha_sq;
    Ok(DoubleArmHeating {
        gamma_b: 8.0 * g1sq_a * gl * r.gamma_t * device.omega_m / (drive.window * k2 * r.omega_s * wa * wa),
        omega_shift: -4.0 * g1sq_a * r.gamma_t / (drive.window * k2 * r.omega_s),
    })
}

/// Probe-induced Γ_b for either topology (double arm: limit form).
pub fn probe_heating(drive: &DriveSpec, device: &Device) -> f64 {
    match device.topology {
        Topology::SingleArm => induced_heating_rlc(drive, device),
        Topology::DoubleArm => double_heating_limit(drive, device).map(|h| h.gamma_b).unwrap_or(0.0),
    }
}

/// Closed-form phonon-number trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trajectory {
    /// Single arm, full linearized solution with stationary electrical noise.
    RlcExact,
    /// Single arm, t ≫ 1/(γ_t+γ_r).
    RlcApprox,
    /// Balanced double arm.
    DoubleArm,
    /// Double arm with residual coupling.
    Combined,
}

/// Evaluates a closed-form n_b(t) on `times`, starting from `n_b0`.
pub fn phonon_trajectory_analytic(
    times: &[f64],
    scenario: Trajectory,
    n_b0: f64,
    drive: &DriveSpec,
    device: &Device,
) -> Result<Vec<f64>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::Domain(format!("negative or non-finite time {t}")));
    }
    let gb = device.gamma_b;
    let nm = device.n_bar_m;
    let thermal_e = 1.0 + 2.0 * device.n_bar_e;
    let out = match scenario {
        Trajectory::RlcApprox => {
            let big = induced_heating_rlc(drive, device);
            times
                .iter()
                .map(|&t| {
                    let e = (-gb * t).exp();
                    // (1 − e^{−γt})/γ stays finite as γ → 0
                    let growth = if gb > 0.0 { -(-gb * t).exp_m1() / gb } else { t };
                    n_b0 * e + nm * (1.0 - e) + big * thermal_e * growth
                })
                .collect()
        }
        Trajectory::RlcExact => {
            let r = &device.rates;
            let kappa = r.kappa();
            let g_eff_sq = device.couplings.g1.powi(2) * drive.alpha_sq * r.gamma_t / (drive.window * kappa * kappa);
            let beta = Complex64::new((gb + kappa) / 2.0, -device.omega_m);
            times
                .iter()
                .map(|&t| {
                    let e = (-gb * t).exp();
                    let first = if gb > 0.0 { -(-gb * t).exp_m1() / gb } else { t };
                    let eb = (-beta * t).exp();
                    let diff = gb - beta;
                    let second = (eb - e) / diff;
                    let j = (Complex64::new(first, 0.0) - second) / beta;
                    n_b0 * e + nm * (1.0 - e) + 2.0 * g_eff_sq * thermal_e * j.re
                })
                .collect()
        }
        Trajectory::DoubleArm | Trajectory::Combined => {
            let big = double_heating_limit(drive, device)?.gamma_b;
            let residual = if scenario == Trajectory::Combined {
                residual_heating(drive, device)
            } else {
                0.0
            };
            let total = gb + big;
            let source = gb * nm
                + (big * device.rates.omega_s / (2.0 * device.omega_m) + residual) * thermal_e;
            times
                .iter()
                .map(|&t| {
                    let growth = if total > 0.0 { -(-total * t).exp_m1() / total } else { t };
                    n_b0 * (-total * t).exp() + source * growth
                })
                .collect()
        }
    };
    Ok(out)
}

/// Steady-state occupation and half-rise time of the Combined / DoubleArm trajectory from n_b(0) = 0.
pub fn combined_steady_state(drive: &DriveSpec, device: &Device, include_residual: bool) -> Result<(Extended, Extended)> {
    let big = double_heating_limit(drive, device)?.gamma_b;
    let residual = if include_residual { residual_heating(drive, device) } else { 0.0 };
    let total = device.gamma_b + big;
    let source = device.gamma_b * device.n_bar_m
        + (big * device.rates.omega_s / (2.0 * device.omega_m) + residual) * (1.0 + 2.0 * device.n_bar_e);
    Ok((Extended::ratio(source, total), Extended::ratio(std::f64::consts::LN_2, total)))
}

/// Window phonon-number increments split by origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingBudget {
    /// Probe back-action through the antisymmetric mode (or the single-arm linear coupling).
    pub probe: f64,
    /// Residual linear coupling of an unbalanced double arm.
    pub residual: f64,
    /// Mechanical bath.
    pub mechanical: f64,
}

impl HeatingBudget {
    pub fn electrical(&self) -> f64 {
        self.probe + self.residual
    }
    pub fn total(&self) -> f64 {
        self.electrical() + self.mechanical
    }
}

/// Δn_b over one window.
pub fn delta_nb(drive: &DriveSpec, device: &Device) -> HeatingBudget {
    let t = drive.window;
    let ne = device.n_bar_e;
    let mechanical = device.gamma_b * device.n_bar_m * t;
    match device.topology {
        Topology::SingleArm => HeatingBudget {
            probe: (1.0 + 2.0 * ne) * device.couplings.g1.powi(2) * drive.alpha_sq / (2.0 * device.omega_m.powi(2)),
            residual: 0.0,
            mechanical,
        },
        Topology::DoubleArm => {
            let big = probe_heating(drive, device);
            HeatingBudget {
                probe: device.rates.omega_s / device.omega_m * big * (ne + 0.5) * t,
                residual: residual_heating(drive, device) * (1.0 + 2.0 * ne) * t,
                mechanical,
            }
        }
    }
}

/// The drive-independent QND figure λ and its two components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaFamily {
    pub lambda: Extended,
    /// Probe back-action limited part (double arm).
    pub lambda_b: Extended,
    /// Residual-coupling limited part (double arm).
    pub lambda_p: Extended,
}

/// λ, λ_b and λ_p in closed form.
pub fn lambda_family(device: &Device) -> LambdaFamily {
    let r = &device.rates;
    let c = &device.couplings;
    let th2 = (1.0 + 2.0 * device.n_bar_e).powi(2);
    let ratio_sq = |a: f64, b: f64| Extended::ratio(a * a, b * b);
    match device.topology {
        Topology::SingleArm => {
            let base = ratio_sq(c.g2, c.g1).scale((device.omega_m / r.gamma_t).powi(2) / (2.0 * th2));
            LambdaFamily {
                lambda: base,
                lambda_b: base,
                lambda_p: Extended::Infinite,
            }
        }
        Topology::DoubleArm => {
            let g_ratio = ratio_sq(c.g2, c.g1);
            let lambda_b = match Extended::ratio(device.z_out, device.parasitic_r) {
                Extended::Infinite if c.g2 != 0.0 => Extended::Infinite,
                Extended::Infinite => Extended::Finite(0.0),
                Extended::Finite(z) => g_ratio.scale(2.0 * (r.omega_s / r.gamma_t).powi(2) * z / th2),
            };
            let lambda_p = if c.g2 == 0.0 {
                Extended::Finite(0.0)
            } else if c.g_r == 0.0 {
                Extended::Infinite
            } else {
                Extended::Finite(2.0 * (c.g2 / c.g_r).powi(2) * (device.omega_m / r.gamma_t).powi(2) / th2)
            };
            LambdaFamily {
                lambda: Extended::harmonic(lambda_b, lambda_p),
                lambda_b,
                lambda_p,
            }
        }
    }
}

/// Mechanical-bath renormalization of λ and the resulting effective occupations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathRenormalization {
    pub lambda_prime: Extended,
    /// Equilibrium occupation N̄_eff of the probed state.
    pub n_eff: Extended,
    /// Effective temperature N̄_e of the electrically induced reservoir.
    pub n_e: Extended,
}

/// λ′ = λ·Δn_el/(Δn_el + Δn_m), N̄_eff = n̄_m·λ/(λ − λ′), N̄_e = Δn_el/[T(γ_b + Γ_b)].
pub fn lambda_prime_and_occupation(
    lambda: Extended,
    budget: &HeatingBudget,
    n_bar_m: f64,
    window: f64,
    gamma_b: f64,
    probe_gamma: f64,
) -> BathRenormalization {
    let el = budget.electrical();
    let total = budget.total();
    let fraction = if total > 0.0 { el / total } else { 1.0 };
    let lambda_prime = lambda.scale(fraction);
    let n_eff = match (lambda, lambda_prime) {
        (Extended::Finite(l), Extended::Finite(lp)) => {
            let gap = l - lp;
            if gap > 0.0 {
                Extended::Finite(n_bar_m * l / gap)
            } else if n_bar_m > 0.0 {
                Extended::Infinite
            } else {
                Extended::Finite(0.0)
            }
        }
        // Unbounded λ with finite λ′ only happens when the electrical share vanishes.
        _ => Extended::Finite(n_bar_m / (1.0 - fraction).max(f64::MIN_POSITIVE)),
    };
    BathRenormalization {
        lambda_prime,
        n_eff,
        n_e: Extended::ratio(el, window * (gamma_b + probe_gamma)),
    }
}

/// Fermi-golden-rule rate of two-phonon transitions driven by the quadratic coupling.
pub fn two_phonon_rate(drive: &DriveSpec, device: &Device) -> f64 {
    let r = &device.rates;
    let g2 = device.couplings.g2;
    g2 * g2 * drive.alpha_sq * r.gamma_t
        / ((r.kappa() / 2.0).powi(2) + (2.0 * device.omega_m).powi(2))
}

/// Feasibility figure of the hybridized-mode regime.
pub fn hybridized_lambda(device: &Device) -> Result<Extended> {
    let (_, gl) = require_double(device)?;
    let r = &device.rates;
    let ne = device.n_bar_e;
    let num = 2.0 * device.couplings.g1.powi(2) * r.gamma_t;
    let den = (1.0 + ne) * (1.0 + 2.0 * ne) * r.kappa().powi(2) * gl;
    Ok(Extended::ratio(num, den))
}

/// All figures of merit for one device and drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub d: f64,
    pub sigma: f64,
    pub d_sq: f64,
    pub gamma_b: f64,
    pub gamma_b_tilde: f64,
    pub omega_b_shift: f64,
    pub delta_nb_electrical: f64,
    pub delta_nb_mechanical: f64,
    pub delta_nb_total: f64,
    pub lambda_b: Extended,
    pub lambda_p: Extended,
    pub lambda: Extended,
    pub lambda_prime: Extended,
    pub n_eff: Extended,
    pub n_e_effective: Extended,
    pub two_phonon_rate: f64,
    /// Two-phonon transitions per window stay far below Δn_b.
    pub two_phonon_negligible: bool,
    pub lambda_hybridized: Option<Extended>,
}

/// Evaluates every closed-form metric.
pub fn merit_report(drive: &DriveSpec, device: &Device) -> MeritReport {
    let budget = delta_nb(drive, device);
    let family = lambda_family(device);
    let big = probe_heating(drive, device);
    let renorm = lambda_prime_and_occupation(family.lambda, &budget, device.n_bar_m, drive.window, device.gamma_b, big);
    let sig0 = homodyne_signal(0, drive, device);
    let omega_b_shift = match device.topology {
        Topology::DoubleArm => double_heating_limit(drive, device).map(|h| h.omega_shift).unwrap_or(0.0),
        Topology::SingleArm => 0.0,
    };
    let rate = two_phonon_rate(drive, device);
    let total = budget.total();
    MeritReport {
        d: signal_distance(drive, device),
        sigma: sig0.sigma,
        d_sq: snr_squared(drive, device),
        gamma_b: big,
        gamma_b_tilde: if device.topology == Topology::DoubleArm { residual_heating(drive, device) } else { 0.0 },
        omega_b_shift,
        delta_nb_electrical: budget.electrical(),
        delta_nb_mechanical: budget.mechanical,
        delta_nb_total: total,
        lambda_b: family.lambda_b,
        lambda_p: family.lambda_p,
        lambda: family.lambda,
        lambda_prime: renorm.lambda_prime,
        n_eff: renorm.n_eff,
        n_e_effective: renorm.n_e,
        two_phonon_rate: rate,
        two_phonon_negligible: rate * drive.window < 0.01 * total.max(f64::MIN_POSITIVE),
        lambda_hybridized: hybridized_lambda(device).ok(),
    }
}
