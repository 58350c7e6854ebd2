//! Truncated Fourier-series solver for the balanced double arm.
//!
//! The antisymmetric electrical mode `a` and the membrane `b` are coupled through the
//! drive-modulated interaction `Λ sin(ω_s t)(a + a†)(b + b†)`. Every operator is expanded
//! on `[0, τ)` over the frequencies `±(ω_m + k ω_s + l·2π/τ)` with `|k| ≤ N_j/2` and
//! `|l| ≤ N_f`. Boundary terms `(O(0) − O(τ))/√τ` make the series represent a
//! non-periodic evolution from a chosen initial state.
//!
//! The system splits into independent blocks, one per comb index `l`, holding the
//! components of `a, a†, b, b†` at `ω_m + k ω_s + l·2π/τ`. The negative-frequency blocks
//! are their Hermitian conjugates. The unknown end values `O(τ)` are closed
//! self-consistently through a 4×4 linear relation.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{half_rise_time, DynamicsSolution};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::metrics::{induced_heating_double, DriveSpec};
use crate::params::{Device, Topology};

type C = Complex64;

const I: C = C { re: 0.0, im: 1.0 };

/// Truncation of the Fourier expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTruncation {
    /// Sideband order N_j (even, ≥ 0); orders |k| ≤ N_j/2 are kept.
    pub sidebands: u32,
    /// Comb half-width N_f per sideband (≥ 1).
    pub comb: u32,
    /// Series period τ, s. `None` selects 10·max(1/γ_b, T).
    pub period: Option<f64>,
}

impl Default for FourierTruncation {
    fn default() -> Self {
        FourierTruncation {
            sidebands: 2,
            comb: 2000,
            period: None,
        }
    }
}

impl FourierTruncation {
    /// Configured period, or 10·max(1/γ_b, T).
    pub fn resolved_period(&self, drive: &DriveSpec, device: &Device) -> f64 {
        self.period.unwrap_or_else(|| {
            let slow = if device.gamma_b > 0.0 { 1.0 / device.gamma_b } else { 0.0 };
            10.0 * slow.max(drive.window)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sidebands.is_multiple_of(2) {
            return Err(Error::config("truncation.sidebands", "must be an even integer"));
        }
        if self.comb < 1 {
            return Err(Error::config("truncation.comb", "must be >= 1"));
        }
        if let Some(p) = self.period {
            if !(p > 0.0) {
                return Err(Error::config("truncation.period", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Result of a Fourier solve together with solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierSolution {
    pub solution: DynamicsSolution,
    /// Period actually used, s.
    pub period: f64,
    /// Relative residual ‖A x − b‖/‖b‖ of the assembled (row-equilibrated) system.
    pub residual: f64,
    /// Steady state recomputed with twice the comb width, when requested.
    pub steady_refined: Option<f64>,
}

/// Model constants in angular units, with ω_m and ω_s snapped onto the comb.
#[derive(Debug, Clone, Copy)]
struct Setup {
    omega_m: f64,
    /// Comb centre: the drive-shifted mechanical frequency.
    center: f64,
    omega_s: f64,
    omega_a: f64,
    gamma_l: f64,
    gamma_b: f64,
    /// Modulation strength Λ of the drive-induced coupling.
    lambda: f64,
    n_bar_e: f64,
    n_bar_m: f64,
    nu: f64,
    tau: f64,
    half: i64,
    comb: i64,
}

impl Setup {
    fn freq(&self, k: i64, l: i64) -> f64 {
        self.center + k as f64 * self.omega_s + l as f64 * self.nu
    }
    fn nk(&self) -> usize {
        (2 * self.half + 1) as usize
    }
}

/// Drive-induced modulation amplitude Λ = 2 g₁ α/(γ_t+γ_r) · √(γ_t ω_a /(T ω_s)).
pub fn modulation_strength(drive: &DriveSpec, device: &Device) -> Result<f64> {
    let wa = device
        .rates
        .omega_a
        .ok_or_else(|| Error::Domain("Fourier solver requires the double-arm topology".into()))?;
    let r = &device.rates;
    Ok(2.0 * device.couplings.g1 * drive.alpha_sq.sqrt() / r.kappa() * (r.gamma_t * wa / (drive.window * r.omega_s)).sqrt())
}

/// Period made commensurate with ω_m and ω_s: both are snapped to the nearest comb harmonics.
fn setup(drive: &DriveSpec, device: &Device, trunc: &FourierTruncation) -> Result<Setup> {
    trunc.validate()?;
    if device.topology != Topology::DoubleArm {
        return Err(Error::Domain("Fourier solver requires the double-arm topology".into()));
    }
    if device.couplings.g_r != 0.0 || device.couplings.delta_g1 != 0.0 {
        return Err(Error::Domain("Fourier solver requires a balanced circuit (g_r = 0)".into()));
    }
    let wa = device.rates.omega_a.unwrap_or(0.0);
    let gl = device.rates.gamma_l.unwrap_or(0.0);
    let tau = trunc.resolved_period(drive, device);
    if !(tau > 0.0) {
        return Err(Error::config("truncation.period", "could not derive a positive period"));
    }
    let nu = 2.0 * PI / tau;
    let snap = |w: f64| (w / nu).round() * nu;
    let shift = induced_heating_double(device.omega_m, drive, device)?.omega_shift;
    let mut s = Setup {
        omega_m: snap(device.omega_m),
        center: 0.0,
        omega_s: snap(device.rates.omega_s),
        omega_a: wa,
        gamma_l: gl,
        gamma_b: device.gamma_b,
        lambda: modulation_strength(drive, device)?,
        n_bar_e: device.n_bar_e,
        n_bar_m: device.n_bar_m,
        nu,
        tau,
        half: (trunc.sidebands / 2) as i64,
        comb: trunc.comb as i64,
    };
    s.center = snap(dressed_resonance(&s, s.omega_m + shift)?);
    Ok(s)
}

/// Inverse mechanical response 1/x_b at the comb centre `center` (single block, unit b source).
fn inverse_response(s: &Setup, center: f64) -> Result<C> {
    let probe = Setup { center, ..*s };
    let m = block_matrix(&probe, 0);
    let mut rhs = nalgebra::DVector::<C>::zeros(m.nrows());
    let row = B * probe.nk() + probe.half as usize;
    rhs[row] = C::new(1.0, 0.0);
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Conditioning("singular block while locating the resonance".into()))?;
    Ok(C::new(1.0, 0.0) / x[row])
}

/// Drive-dressed mechanical frequency: root of Im(1/x_b) by secant iteration from `guess`.
fn dressed_resonance(s: &Setup, guess: f64) -> Result<f64> {
    let f = |w: f64| inverse_response(s, w).map(|d| d.im);
    let (mut w0, mut w1) = (s.omega_m, guess);
    let (mut f0, mut f1) = (f(w0)?, f(w1)?);
    for _ in 0..50 {
        if f1 == f0 || (w1 - w0).abs() <= 1e-3 * s.nu {
            return Ok(w1);
        }
        let w2 = w1 - f1 * (w1 - w0) / (f1 - f0);
        (w0, f0) = (w1, f1);
        w1 = w2;
        f1 = f(w1)?;
    }
    Err(Error::Convergence("dressed mechanical resonance search did not converge".into()))
}

// Operator order inside a block: a, a†, b, b†.
const A: usize = 0;
const AD: usize = 1;
const B: usize = 2;
const BD: usize = 3;

fn conj_type(o: usize) -> usize {
    o ^ 1
}

/// Dense block matrix for comb index `l`.
fn block_matrix(s: &Setup, l: i64) -> DMatrix<C> {
    let nk = s.nk();
    let n = 4 * nk;
    let idx = |o: usize, k: i64| o * nk + (k + s.half) as usize;
    let mut m = DMatrix::<C>::zeros(n, n);
    let half_l = C::new(s.lambda / 2.0, 0.0);
    for k in -s.half..=s.half {
        let w = s.freq(k, l);
        m[(idx(A, k), idx(A, k))] = C::new(s.gamma_l / 2.0, -w + s.omega_a);
        m[(idx(A, k), idx(AD, k))] = C::new(-s.gamma_l / 2.0, 0.0);
        m[(idx(AD, k), idx(AD, k))] = C::new(s.gamma_l / 2.0, -w - s.omega_a);
        m[(idx(AD, k), idx(A, k))] = C::new(-s.gamma_l / 2.0, 0.0);
        m[(idx(B, k), idx(B, k))] = C::new(s.gamma_b / 2.0, -w + s.omega_m);
        m[(idx(BD, k), idx(BD, k))] = C::new(s.gamma_b / 2.0, -w - s.omega_m);
        // ±(Λ/2)(X[Ω+ω_s] − X[Ω−ω_s]) with X = b + b† in the electrical rows, a + a† in the mechanical rows.
        for (shift, sign) in [(1i64, 1.0), (-1, -1.0)] {
            let kk = k + shift;
            if kk.abs() > s.half {
                continue;
            }
            let c = half_l * sign;
            for other in [B, BD] {
                m[(idx(A, k), idx(other, kk))] += c;
                m[(idx(AD, k), idx(other, kk))] -= c;
            }
            for other in [A, AD] {
                m[(idx(B, k), idx(other, kk))] += c;
                m[(idx(BD, k), idx(other, kk))] -= c;
            }
        }
    }
    m
}

/// A noise source of one block: its right-hand side and the weights of the channels ξ and ξ†.
struct Source {
    rhs: Vec<(usize, C)>,
    /// ⟨ξ†ξ⟩
    w_plain: f64,
    /// ⟨ξ ξ†⟩
    w_dagger: f64,
}

/// Noise sources of block `l`: resistor noise at each frequency and the mechanical bath.
fn block_sources(s: &Setup, l: i64) -> Vec<Source> {
    let nk = s.nk();
    let idx = |o: usize, k: i64| o * nk + (k + s.half) as usize;
    let mut out = Vec::with_capacity(3 * nk);
    for k in -s.half..=s.half {
        let w = s.freq(k, l);
        // Resistor voltage noise enters the a and a† rows as ±i·W; its spectral weight
        // in these units is γ_l|Ω|/ω_a, absorptive for Ω > 0.
        let scale = s.gamma_l * w.abs() / s.omega_a;
        let (lower, upper) = (scale * s.n_bar_e, scale * (s.n_bar_e + 1.0));
        let (w_plain, w_dagger) = if w > 0.0 { (lower, upper) } else { (upper, lower) };
        out.push(Source {
            rhs: vec![(idx(A, k), I), (idx(AD, k), -I)],
            w_plain,
            w_dagger,
        });
        let amp = C::new(s.gamma_b.sqrt(), 0.0);
        out.push(Source {
            rhs: vec![(idx(B, k), amp)],
            w_plain: s.n_bar_m,
            w_dagger: s.n_bar_m + 1.0,
        });
        out.push(Source {
            rhs: vec![(idx(BD, k), amp)],
            w_plain: s.n_bar_m + 1.0,
            w_dagger: s.n_bar_m,
        });
    }
    out
}

/// What is kept from one block solve.
struct BlockData {
    /// Boundary responses: for each boundary type j and sideband k, the b and b† components.
    bnd_b: Vec<[C; 4]>,
    bnd_bd: Vec<[C; 4]>,
    /// Boundary responses summed over sidebands, per operator row: sum[o][j].
    bnd_sum: [[C; 4]; 4],
    /// Per noise source: b and b† components per sideband, row sums per operator, and weights.
    src_b: Vec<Vec<C>>,
    src_bd: Vec<Vec<C>>,
    src_sum: Vec<[C; 4]>,
    weights: Vec<(f64, f64)>,
    /// Contribution to the periodic steady state.
    steady: f64,
    /// Squared norms of the block residual and right-hand side.
    residual_sq: f64,
    rhs_sq: f64,
}

/// Error-free product and sum (Dekker/Knuth), accumulated as a compensated dot product.
#[derive(Default)]
struct Dot2 {
    sum: f64,
    err: f64,
}

impl Dot2 {
    fn add(&mut self, v: f64) {
        let s = self.sum + v;
        let z = s - self.sum;
        self.err += (self.sum - (s - z)) + (v - z);
        self.sum = s;
    }
    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.err += a.mul_add(b, -p);
    }
    fn value(&self) -> f64 {
        self.sum + self.err
    }
}

/// rhs − m·x evaluated with compensated dot products.
fn accurate_residual(m: &DMatrix<C>, x: &DMatrix<C>, rhs: &DMatrix<C>) -> DMatrix<C> {
    DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |r, c| {
        let (mut re, mut im) = (Dot2::default(), Dot2::default());
        re.add(rhs[(r, c)].re);
        im.add(rhs[(r, c)].im);
        for j in 0..m.ncols() {
            let (a, b) = (m[(r, j)], x[(j, c)]);
            re.add_product(-a.re, b.re);
            re.add_product(a.im, b.im);
            im.add_product(-a.re, b.im);
            im.add_product(-a.im, b.re);
        }
        C::new(re.value(), im.value())
    })
}

fn solve_block(s: &Setup, l: i64) -> Result<BlockData> {
    let nk = s.nk();
    let n = 4 * nk;
    let m = block_matrix(s, l);
    let sources = block_sources(s, l);
    let ns = sources.len();
    let mut rhs = DMatrix::<C>::zeros(n, ns + 4);
    for (c, src) in sources.iter().enumerate() {
        for &(r, v) in &src.rhs {
            rhs[(r, c)] = v;
        }
    }
    let inv_sqrt_tau = 1.0 / s.tau.sqrt();
    for j in 0..4 {
        for k in 0..nk {
            rhs[(j * nk + k, ns + j)] = C::new(inv_sqrt_tau, 0.0);
        }
    }
    // Row equilibration: entries span γ_b to ω_a, so residuals are measured on scaled rows.
    let mut m = m;
    for r in 0..n {
        let scale = m.row(r).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            let inv = C::new(1.0 / scale, 0.0);
            m.row_mut(r).scale_mut(1.0 / scale);
            for c in 0..rhs.ncols() {
                rhs[(r, c)] *= inv;
            }
        }
    }
    let lu = m.clone().lu();
    let mut x = lu.solve(&rhs).ok_or_else(|| {
        Error::Conditioning(format!(
            "singular block at comb index {l} (frequency {:.6e} rad/s, {} sidebands)",
            s.freq(0, l),
            2 * s.half
        ))
    })?;
    let rhs_norm = rhs.norm();
    for _ in 0..2 {
        let r = accurate_residual(&m, &x, &rhs);
        if r.norm() <= 1e-15 * rhs_norm {
            break;
        }
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let resid_sq = accurate_residual(&m, &x, &rhs).norm_squared();
    if !resid_sq.is_finite() {
        return Err(Error::Conditioning(format!("non-finite solution at comb index {l}")));
    }
    let row = |o: usize, k: usize| o * nk + k;
    let col_sum = |c: usize| -> [C; 4] {
        let mut out = [C::new(0.0, 0.0); 4];
        for (o, slot) in out.iter_mut().enumerate() {
            *slot = (0..nk).map(|k| x[(row(o, k), c)]).sum::<C>() * inv_sqrt_tau;
        }
        out
    };
    let mut bnd_b = vec![[C::new(0.0, 0.0); 4]; nk];
    let mut bnd_bd = vec![[C::new(0.0, 0.0); 4]; nk];
    let mut bnd_sum = [[C::new(0.0, 0.0); 4]; 4];
    for j in 0..4 {
        for k in 0..nk {
            bnd_b[k][j] = x[(row(B, k), ns + j)];
            bnd_bd[k][j] = x[(row(BD, k), ns + j)];
        }
        let sums = col_sum(ns + j);
        for o in 0..4 {
            bnd_sum[o][j] = sums[o];
        }
    }
    let mut steady = 0.0;
    let mut src_b = Vec::with_capacity(ns);
    let mut src_bd = Vec::with_capacity(ns);
    let mut src_sum = Vec::with_capacity(ns);
    let mut weights = Vec::with_capacity(ns);
    for (c, src) in sources.iter().enumerate() {
        let bs: Vec<C> = (0..nk).map(|k| x[(row(B, k), c)]).collect();
        let bds: Vec<C> = (0..nk).map(|k| x[(row(BD, k), c)]).collect();
        steady += (src.w_plain * bs.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + src.w_dagger * bds.iter().map(|z| z.norm_sqr()).sum::<f64>())
            / s.tau;
        src_b.push(bs);
        src_bd.push(bds);
        src_sum.push(col_sum(c));
        weights.push((src.w_plain, src.w_dagger));
    }
    Ok(BlockData {
        bnd_b,
        bnd_bd,
        bnd_sum,
        src_b,
        src_bd,
        src_sum,
        weights,
        steady,
        residual_sq: resid_sq,
        rhs_sq: rhs_norm * rhs_norm,
    })
}

fn solve_all(s: &Setup) -> Result<Vec<BlockData>> {
    (-s.comb..=s.comb).into_par_iter().map(|l| solve_block(s, l)).collect()
}

/// Periodic steady-state occupation only (cheap: no time evaluation).
fn steady_only(s: &Setup) -> Result<f64> {
    let blocks = solve_all(s)?;
    Ok(blocks.iter().map(|b| b.steady).sum())
}

/// Solves the balanced double-arm heating problem and evaluates n_b on `times` (within `[0, τ)`).
///
/// With `check_convergence`, the steady state is recomputed with twice the comb width and a
/// warning is attached when the two differ by more than 1%.
pub fn fourier_heating_solve(
    drive: &DriveSpec,
    device: &Device,
    trunc: &FourierTruncation,
    times: &[f64],
    n_b0: f64,
    check_convergence: bool,
) -> Result<FourierSolution> {
    let s = setup(drive, device, trunc)?;
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && **t < s.tau)) {
        return Err(Error::Domain(format!("time {t} outside the series period [0, {})", s.tau)));
    }
    let blocks = solve_all(&s)?;
    let nk = s.nk();
    let n_steady: f64 = blocks.iter().map(|b| b.steady).sum();
    let residual = (blocks.iter().map(|b| b.residual_sq).sum::<f64>() / blocks.iter().map(|b| b.rhs_sq).sum::<f64>()).sqrt();

    // Series value of the boundary response at the period edge, K_τ[o][j].
    let mut k_tau = Matrix4::<C>::zeros();
    for blk in &blocks {
        for o in 0..4 {
            for j in 0..4 {
                k_tau[(o, j)] += blk.bnd_sum[o][j];
                // conjugate branch maps boundary type j onto its conjugate column
                k_tau[(o, conj_type(j))] += blk.bnd_sum[conj_type(o)][j].conj();
            }
        }
    }
    let closure = (k_tau + Matrix4::<C>::identity() * C::new(0.5, 0.0))
        .try_inverse()
        .ok_or_else(|| Error::Conditioning("boundary closure matrix is singular".into()))?;

    // Aggregate second moments of the closure vectors and the per-block cross vectors.
    let inv_sqrt_tau = 1.0 / s.tau.sqrt();
    let mut z_total = Matrix4::<C>::zeros();
    let init_weights = [
        (A, s.n_bar_e),
        (AD, s.n_bar_e + 1.0),
        (B, n_b0),
        (BD, n_b0 + 1.0),
    ];
    for (j, w) in init_weights {
        let mut e = Vector4::<C>::zeros();
        e[j] = C::new(1.0, 0.0);
        let z = closure * e;
        z_total += z * z.adjoint() * C::new(w, 0.0);
    }
    // cross_plus[l][k], cross_minus[l][k]: Σ_ξ w conj(c) z for the two branches.
    let mut cross_plus = vec![vec![Vector4::<C>::zeros(); nk]; blocks.len()];
    let mut cross_minus = vec![vec![Vector4::<C>::zeros(); nk]; blocks.len()];
    for (li, blk) in blocks.iter().enumerate() {
        for (c, &(w_plain, w_dagger)) in blk.weights.iter().enumerate() {
            let sum = blk.src_sum[c];
            let c_plain = Vector4::from_iterator(sum.iter().copied());
            let c_dagger = Vector4::from_iterator((0..4).map(|o| sum[conj_type(o)].conj()));
            let z_plain = closure * c_plain;
            let z_dagger = closure * c_dagger;
            z_total += z_plain * z_plain.adjoint() * C::new(w_plain, 0.0);
            z_total += z_dagger * z_dagger.adjoint() * C::new(w_dagger, 0.0);
            for k in 0..nk {
                cross_plus[li][k] += z_plain * (blk.src_b[c][k].conj() * w_plain * inv_sqrt_tau);
                cross_minus[li][k] += z_dagger * (blk.src_bd[c][k] * w_dagger * inv_sqrt_tau);
            }
        }
    }

    let n_b: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return n_b0;
            }
            let mut total = n_steady;
            for k in 0..nk {
                // Slow envelopes of the boundary response (b row) and of the cross vectors.
                let mut kp = Vector4::<C>::zeros();
                let mut km = Vector4::<C>::zeros();
                let mut sp = Vector4::<C>::zeros();
                let mut sm = Vector4::<C>::zeros();
                for (li, blk) in blocks.iter().enumerate() {
                    let l = li as i64 - s.comb;
                    let ph = C::from_polar(1.0, -(l as f64) * s.nu * t);
                    for j in 0..4 {
                        kp[j] += blk.bnd_b[k][j] * ph * inv_sqrt_tau;
                        km[conj_type(j)] += (blk.bnd_bd[k][j] * ph).conj() * inv_sqrt_tau;
                    }
                    sp += cross_plus[li][k] * ph.conj();
                    sm += cross_minus[li][k] * ph;
                }
                for (kv, sv) in [(kp, sp), (km, sm)] {
                    let quad = (kv.transpose() * z_total * kv.conjugate())[(0, 0)].re;
                    let cross = (kv.transpose() * sv)[(0, 0)].re;
                    total += quad - 2.0 * cross;
                }
            }
            total
        })
        .collect();

    let mut solution = DynamicsSolution::from_trajectory(times.to_vec(), n_b, Extended::Finite(n_steady));
    solution.t_half = half_rise_time(times, &solution.n_b, n_steady);
    let mut steady_refined = None;
    if check_convergence {
        let refined = steady_only(&Setup {
            comb: 2 * s.comb,
            ..s
        })?;
        if (refined - n_steady).abs() > 0.01 * refined.abs() {
            solution.warnings.push(format!(
                "steady state changes by {:.2}% when the comb width doubles; increase N_f",
                100.0 * (refined - n_steady).abs() / refined.abs()
            ));
        }
        steady_refined = Some(refined);
    }
    if residual > 1e-10 {
        solution
            .warnings
            .push(format!("linear-solve residual {residual:e} exceeds 1e-10"));
    }
    Ok(FourierSolution {
        solution,
        period: s.tau,
        residual,
        steady_refined,
    })
}

/// Periodic steady state for a given truncation, without time evaluation.
pub fn fourier_steady_state(drive: &DriveSpec, device: &Device, trunc: &FourierTruncation) -> Result<f64> {
    steady_only(&setup(drive, device, trunc)?)
}
