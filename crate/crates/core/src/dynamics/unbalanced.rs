//! Time-periodic simulator for the double arm with asymmetric parasitic elements.
//!
//! The circuit is described in the lab frame by the charges and fluxes of the antisymmetric
//! and symmetric combinations, `(Q_a, Φ_a, Q_s, Φ_s)`, plus the membrane quadratures `(x, p)`.
//! Arm mismatches δL, δR, δC enter through symmetric inductance, resistance and
//! inverse-capacitance matrices, so that
//!
//! ```text
//! Q̇ = L⁻¹Φ,    Φ̇ = −K Q − R L⁻¹ Φ + noise + coupling
//! ```
//!
//! The drive sets a periodic classical charge on both modes; fluctuations are linearized around
//! it and their symmetrized covariance is propagated with a one-period map built from
//! fourth-order Magnus steps. Longer times use powers of that map (stroboscopic sampling).

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use super::covariance::{mode_occupation, AffineMap, CMatrix, LinearModel, lyapunov_steady_state, to_complex};
use super::DynamicsSolution;
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::metrics::DriveSpec;
use crate::params::{CircuitSpec, Device, Topology};

const QA: usize = 0;
const PA: usize = 1;
const QS: usize = 2;
const PS: usize = 3;
const X: usize = 4;
const P: usize = 5;

/// Asymmetries beyond this relative size trigger a validity warning.
pub const ASYMMETRY_ENVELOPE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnbalancedOptions {
    /// Magnus steps per drive period.
    pub steps_per_period: usize,
}

impl Default for UnbalancedOptions {
    fn default() -> Self {
        UnbalancedOptions { steps_per_period: 2000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnbalancedSolution {
    /// Trajectory on the stroboscopic times actually sampled.
    pub solution: DynamicsSolution,
    /// Energy relaxation rate of the membrane from the one-period map, 1/s.
    pub relaxation_rate: f64,
    /// Linearized heating rate h = Γ·(n_b(∞) − n_b(0)), phonons/s.
    pub heating_rate: f64,
    /// Drive period, s (the drive sits on the symmetric resonance of the mismatched circuit).
    pub period: f64,
    /// Classical charge amplitudes of the antisymmetric and symmetric modes, in units of √(ħC₀ω_s).
    pub mean_amplitudes: (f64, f64),
}

/// Inductance, inverse-capacitance and resistance matrices in the (a, s) basis.
struct ElementMatrices {
    inductance_inv: Matrix2<f64>,
    stiffness: Matrix2<f64>,
    resistance: Matrix2<f64>,
}

fn element_matrices(circuit: &CircuitSpec) -> Result<ElementMatrices> {
    let (l, l0, c0) = (circuit.parasitic_l, circuit.l0, circuit.c0);
    let (dl, dr, dc) = (circuit.delta_l, circuit.delta_r, circuit.delta_c);
    let inductance = Matrix2::new(2.0 * l, dl, dl, (l + 2.0 * l0) / 2.0);
    let inductance_inv = inductance
        .try_inverse()
        .ok_or_else(|| Error::SingularParameter("arm inductance matrix is singular (δL² = L² + 2LL₀)".into()))?;
    let den = c0 * c0 - dc * dc;
    if !(den > 0.0) {
        return Err(Error::SingularParameter("|δC| must be smaller than C₀".into()));
    }
    let stiffness = Matrix2::new(2.0 * c0, -dc, -dc, c0 / 2.0) / den;
    let rs = circuit.z_out + circuit.r0 + circuit.parasitic_r / 2.0;
    let resistance = Matrix2::new(2.0 * circuit.parasitic_r, dr, dr, rs);
    Ok(ElementMatrices {
        inductance_inv,
        stiffness,
        resistance,
    })
}

/// Constant part of the scaled electrical drift (4×4, order q_a, φ_a, q_s, φ_s).
fn electrical_drift(el: &ElementMatrices, c0: f64, omega_s: f64) -> Matrix4<f64> {
    let scale = c0 * omega_s;
    let damping = el.resistance * el.inductance_inv;
    let mut a = Matrix4::zeros();
    let q = [QA, QS];
    let f = [PA, PS];
    for i in 0..2 {
        for j in 0..2 {
            a[(q[i], f[j])] = el.inductance_inv[(i, j)] / scale;
            a[(f[i], q[j])] = -scale * el.stiffness[(i, j)];
            a[(f[i], f[j])] = -damping[(i, j)];
        }
    }
    a
}

/// Complex charge phasors (q_a, q_s) of the periodic drive response, m(t) = Re(M e^{−iω_s t}).
fn drive_phasors(a_el: &Matrix4<f64>, omega_s: f64, force: f64) -> Result<(Complex64, Complex64)> {
    let op = Matrix4::<Complex64>::identity() * Complex64::new(0.0, -omega_s) - a_el.map(|x| Complex64::new(x, 0.0));
    let mut rhs = Vector4::<Complex64>::zeros();
    rhs[PS] = Complex64::new(force, 0.0);
    let m = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Conditioning("electrical response matrix is singular at ω_s".into()))?;
    Ok((m[QA], m[QS]))
}

/// Oscillation frequency of the electrical eigenmode closest to `nominal`.
fn symmetric_resonance(a_el: &Matrix4<f64>, nominal: f64) -> f64 {
    a_el.complex_eigenvalues()
        .iter()
        .map(|z| z.im.abs())
        .min_by(|a, b| (a - nominal).abs().total_cmp(&(b - nominal).abs()))
        .unwrap_or(nominal)
}

/// Time-dependent scaled drift A(t) = A₀ + A_c cos ω_s t + A_s sin ω_s t.
struct PeriodicDrift {
    base: DMatrix<f64>,
    cos: DMatrix<f64>,
    sin: DMatrix<f64>,
    omega_s: f64,
}

impl PeriodicDrift {
    fn at(&self, t: f64) -> DMatrix<f64> {
        let (s, c) = (self.omega_s * t).sin_cos();
        &self.base + &self.cos * c + &self.sin * s
    }
}

fn coupling_block(g1: f64, dg1: f64, qa: f64, qs: f64) -> DMatrix<f64> {
    // H_lin/ħ = √2 x (c_a q_a + c_s q_s), with c_a = g₁ q̄_s + 2δg₁ q̄_a and c_s = g₁ q̄_a + δg₁ q̄_s/2.
    let ca = SQRT_2 * (g1 * qs + 2.0 * dg1 * qa);
    let cs = SQRT_2 * (g1 * qa + dg1 * qs / 2.0);
    let mut m = DMatrix::zeros(6, 6);
    m[(PA, X)] = -ca;
    m[(PS, X)] = -cs;
    m[(P, QA)] = -ca;
    m[(P, QS)] = -cs;
    m
}

/// One-period affine map of the symmetrized covariance.
fn period_map(drift: &PeriodicDrift, noise: &CMatrix, steps: usize) -> AffineMap {
    let period = 2.0 * PI / drift.omega_s;
    let h = period / steps as f64;
    let offset = 3f64.sqrt() / 6.0;
    let mut map = AffineMap::identity(6);
    for k in 0..steps {
        let t0 = k as f64 * h;
        let a1 = drift.at(t0 + h * (0.5 - offset));
        let a2 = drift.at(t0 + h * (0.5 + offset));
        let comm = &a2 * &a1 - &a1 * &a2;
        let generator = (&a1 + &a2) * 0.5 + comm * (3f64.sqrt() / 12.0 * h);
        let step = AffineMap::constant(&to_complex(&generator), noise, h);
        map = map.then(&step);
    }
    map
}

/// Periodic steady state M = F M Fᵀ + Q of the stroboscopic map.
fn discrete_steady_state(map: &AffineMap) -> Result<CMatrix> {
    let n = map.f.nrows();
    let op = CMatrix::identity(n * n, n * n) - map.f.kronecker(&map.f);
    let rhs = CMatrix::from_column_slice(n * n, 1, map.q.as_slice());
    let sol = op
        .full_piv_lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Conditioning("stroboscopic Lyapunov operator is singular".into()))?;
    let m = CMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&m + m.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Simulates the membrane occupation with all arm asymmetries.
///
/// `device` supplies g₁, δg₁, ω_m, γ_b and the bath occupations; `circuit` supplies the element
/// values and their mismatches. Requested times are rounded to whole drive periods.
pub fn unbalanced_simulate(
    circuit: &CircuitSpec,
    device: &Device,
    drive: &DriveSpec,
    times: &[f64],
    n_b0: f64,
    options: &UnbalancedOptions,
) -> Result<UnbalancedSolution> {
    if circuit.topology != Topology::DoubleArm {
        return Err(Error::Domain("asymmetric simulation requires the double-arm topology".into()));
    }
    circuit.validate()?;
    if options.steps_per_period < 8 {
        return Err(Error::config("options.steps_per_period", "must be >= 8"));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::Domain(format!("negative or non-finite time {t}")));
    }
    let mut warnings = Vec::new();
    let (rr, rl, rc) = circuit.relative_asymmetries();
    for (name, v) in [("δR/R", rr), ("δL/L", rl), ("δC/C₀", rc)] {
        if v.abs() > ASYMMETRY_ENVELOPE {
            warnings.push(format!("{name} = {v:.3} lies outside the ±25% validity envelope"));
        }
    }

    let nominal = device.rates.omega_s;
    let c0 = circuit.c0;
    let el = element_matrices(circuit)?;
    let a_el = electrical_drift(&el, c0, nominal);
    // The drive follows the symmetric resonance, which mismatches pull away from ω_s.
    let omega_s = symmetric_resonance(&a_el, nominal);

    // Drive strength fixed by the balanced symmetric-mode amplitude 4√(flux·γ_t)/κ.
    let balanced = CircuitSpec {
        delta_l: 0.0,
        delta_r: 0.0,
        delta_c: 0.0,
        ..circuit.clone()
    };
    let a_bal = electrical_drift(&element_matrices(&balanced)?, c0, nominal);
    let (_, unit_qs) = drive_phasors(&a_bal, symmetric_resonance(&a_bal, nominal), 1.0)?;
    let target = 4.0 * (drive.flux() * device.rates.gamma_t).sqrt() / device.rates.kappa();
    let force = target / unit_qs.norm();
    let (qa, qs) = drive_phasors(&a_el, omega_s, force)?;

    let (g1, dg1) = (device.couplings.g1, device.couplings.delta_g1);
    let mut base = DMatrix::<f64>::zeros(6, 6);
    base.view_mut((0, 0), (4, 4)).copy_from(&a_el);
    base[(X, X)] = -device.gamma_b / 2.0;
    base[(P, P)] = -device.gamma_b / 2.0;
    base[(X, P)] = device.omega_m;
    base[(P, X)] = -device.omega_m;
    let drift = PeriodicDrift {
        base,
        cos: coupling_block(g1, dg1, qa.re, qs.re),
        sin: coupling_block(g1, dg1, qa.im, qs.im),
        omega_s,
    };

    let mut noise = CMatrix::zeros(6, 6);
    let electrical = c0 * nominal * omega_s * (2.0 * device.n_bar_e + 1.0);
    let f = [PA, PS];
    for i in 0..2 {
        for j in 0..2 {
            noise[(f[i], f[j])] = Complex64::new(electrical * el.resistance[(i, j)], 0.0);
        }
    }
    let mech = device.gamma_b * (device.n_bar_m + 0.5);
    noise[(X, X)] = Complex64::new(mech, 0.0);
    noise[(P, P)] = Complex64::new(mech, 0.0);

    // Initial state: uncoupled electrical steady state, thermal membrane.
    let el_model = LinearModel::new(
        vec!["antisymmetric".into(), "symmetric".into()],
        DMatrix::from_fn(4, 4, |i, j| a_el[(i, j)]),
        noise.view((0, 0), (4, 4)).into_owned(),
        0,
    )?;
    let el_state = lyapunov_steady_state(&el_model)?;
    let mut initial = CMatrix::zeros(6, 6);
    initial.view_mut((0, 0), (4, 4)).copy_from(&el_state);
    initial[(X, X)] = Complex64::new(n_b0 + 0.5, 0.0);
    initial[(P, P)] = Complex64::new(n_b0 + 0.5, 0.0);

    let map = period_map(&drift, &noise, options.steps_per_period);
    let period = 2.0 * PI / omega_s;

    let real_f = map.f.map(|z| z.re);
    let multipliers = real_f.complex_eigenvalues();
    let largest = multipliers.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest >= 1.0 {
        let z = multipliers
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .copied()
            .unwrap_or_default();
        let exponent = z.ln() / period;
        return Err(Error::UnstableDrift {
            re: exponent.re,
            im: exponent.im,
        });
    }
    let relaxation_rate = -2.0 * largest.ln() / period;

    let steady_m = discrete_steady_state(&map)?;
    let n_steady = mode_occupation(&steady_m, 2);

    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut powers = vec![map];
    let mut state = initial;
    let mut done: u64 = 0;
    let mut sampled = vec![0.0; times.len()];
    let mut n_b = vec![0.0; times.len()];
    for &i in &order {
        let target_periods = (times[i] / period).round() as u64;
        let mut delta = target_periods - done;
        let mut bit = 0;
        while delta > 0 {
            while powers.len() <= bit {
                let last = powers.last().cloned().unwrap_or_else(|| AffineMap::identity(6));
                powers.push(last.then(&last));
            }
            if delta & 1 == 1 {
                state = powers[bit].apply(&state);
            }
            delta >>= 1;
            bit += 1;
        }
        done = target_periods;
        sampled[i] = target_periods as f64 * period;
        n_b[i] = mode_occupation(&state, 2);
    }

    let mut solution = DynamicsSolution::from_trajectory(sampled, n_b, Extended::Finite(n_steady));
    solution.warnings = warnings;
    Ok(UnbalancedSolution {
        solution,
        relaxation_rate,
        heating_rate: relaxation_rate * (n_steady - n_b0),
        period,
        mean_amplitudes: (qa.norm(), qs.norm()),
    })
}
