//! Exact second-moment propagation for linear quantum Langevin models.
//!
//! A model is a set of bosonic modes described by quadratures `(x, p)` with `[x, p] = i`.
//! The second-moment matrix `M = ⟨z zᵀ⟩` (not symmetrized) obeys
//! `dM/dt = A M + M Aᵀ + N`, where `A` is the real drift and `N` the Hermitian noise
//! injection. Evolution over a finite interval is the affine map `M ↦ F M Fᵀ + Q`,
//! obtained exactly from a block matrix exponential.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::DynamicsSolution;
use crate::extended::Extended;
use crate::error::{Error, Result};
use crate::metrics::DriveSpec;
use crate::params::Device;

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Real drift and Hermitian noise of a linear model, plus the mode whose occupation is reported.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub labels: Vec<String>,
    pub drift: DMatrix<f64>,
    pub noise: CMatrix,
    /// Index of the mode whose ⟨b†b⟩ is reported.
    pub readout_mode: usize,
}

impl LinearModel {
    pub fn new(labels: Vec<String>, drift: DMatrix<f64>, noise: CMatrix, readout_mode: usize) -> Result<Self> {
        let n = 2 * labels.len();
        if drift.shape() != (n, n) || noise.shape() != (n, n) {
            return Err(Error::Domain(format!(
                "model with {} modes needs {n}x{n} drift and noise, got {:?} and {:?}",
                labels.len(),
                drift.shape(),
                noise.shape()
            )));
        }
        if readout_mode >= labels.len() {
            return Err(Error::Domain("readout mode index out of range".into()));
        }
        Ok(LinearModel {
            labels,
            drift,
            noise,
            readout_mode,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// Fails with the offending eigenvalue if any drift eigenvalue has a positive real part.
    pub fn check_stable(&self) -> Result<()> {
        let eig = self.drift.clone().complex_eigenvalues();
        let scale = self.drift.amax().max(f64::MIN_POSITIVE);
        if let Some(bad) = eig.iter().filter(|z| z.re > 1e-12 * scale).max_by(|a, b| a.re.total_cmp(&b.re)) {
            return Err(Error::UnstableDrift { re: bad.re, im: bad.im });
        }
        Ok(())
    }

    /// Whether every drift eigenvalue has a strictly negative real part.
    pub fn is_strictly_stable(&self) -> bool {
        let scale = self.drift.amax().max(f64::MIN_POSITIVE);
        self.drift.clone().complex_eigenvalues().iter().all(|z| z.re < -1e-14 * scale)
    }

    /// ⟨b†b⟩ of the readout mode.
    pub fn occupation(&self, m: &CMatrix) -> f64 {
        mode_occupation(m, self.readout_mode)
    }
}

/// ⟨b†b⟩ = (⟨x²⟩ + ⟨p²⟩ − 1)/2 for mode `k`.
pub fn mode_occupation(m: &CMatrix, k: usize) -> f64 {
    (m[(2 * k, 2 * k)].re + m[(2 * k + 1, 2 * k + 1)].re - 1.0) / 2.0
}

/// Canonical commutator matrix Ω/2 placed in the imaginary part of `M`.
pub fn symplectic_half(modes: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        s[(2 * k, 2 * k + 1)] = 0.5;
        s[(2 * k + 1, 2 * k)] = -0.5;
    }
    s
}

/// Thermal second moments with the given occupations per mode.
pub fn thermal_state(occupations: &[f64]) -> CMatrix {
    let n = occupations.len();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for (k, &occ) in occupations.iter().enumerate() {
        m[(2 * k, 2 * k)] = c(occ + 0.5);
        m[(2 * k + 1, 2 * k + 1)] = c(occ + 0.5);
        m[(2 * k, 2 * k + 1)] = Complex64::new(0.0, 0.5);
        m[(2 * k + 1, 2 * k)] = Complex64::new(0.0, -0.5);
    }
    m
}

/// Noise block of a mode damped at energy rate `rate` into a bath with occupation `n_bar`.
pub fn damping_noise(rate: f64, n_bar: f64) -> [[Complex64; 2]; 2] {
    [
        [c(rate * (n_bar + 0.5)), Complex64::new(0.0, rate / 2.0)],
        [Complex64::new(0.0, -rate / 2.0), c(rate * (n_bar + 0.5))],
    ]
}

/// Affine second-moment map `M ↦ F M Fᵀ + Q` over a fixed interval.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub f: CMatrix,
    pub q: CMatrix,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap {
            f: CMatrix::identity(n, n),
            q: CMatrix::zeros(n, n),
        }
    }

    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        &self.f * m * self.f.transpose() + &self.q
    }

    /// `later ∘ self`: first `self`, then `later`.
    pub fn then(&self, later: &AffineMap) -> AffineMap {
        AffineMap {
            f: &later.f * &self.f,
            q: &later.f * &self.q * later.f.transpose() + &later.q,
        }
    }

    /// `self` applied `k` times, by binary powering.
    pub fn power(&self, mut k: u64) -> AffineMap {
        let mut result = AffineMap::identity(self.f.nrows());
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.then(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.then(&base);
            }
        }
        result
    }

    /// Exact map for constant drift `a` and noise `n` over `dt`.
    ///
    /// The block exponential is only taken on a short sub-step (‖A‖h ≤ 1/2) and then squared,
    /// which keeps the strongly damped directions from overflowing the off-diagonal block.
    pub fn constant(a: &CMatrix, n: &CMatrix, dt: f64) -> AffineMap {
        let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
        let mut halvings = 0u32;
        while norm * dt / 2f64.powi(halvings as i32) > 0.5 && halvings < 200 {
            halvings += 1;
        }
        let h = dt / 2f64.powi(halvings as i32);
        let mut map = van_loan(a, n, h);
        for _ in 0..halvings {
            map = map.then(&map);
        }
        map
    }
}

/// Van Loan block exponential for a single short step.
fn van_loan(a: &CMatrix, n: &CMatrix, h: f64) -> AffineMap {
    let d = a.nrows();
    let mut block = CMatrix::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(&(-a * c(h)));
    block.view_mut((0, d), (d, d)).copy_from(&(n * c(h)));
    block.view_mut((d, d), (d, d)).copy_from(&(a.transpose() * c(h)));
    let e = block.exp();
    let f = e.view((d, d), (d, d)).transpose();
    let q = &f * e.view((0, d), (d, d));
    // Q is Hermitian in exact arithmetic.
    let q = (&q + q.adjoint()) * c(0.5);
    AffineMap { f, q }
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(c)
}

/// Second moments on `times` (non-decreasing, starting anywhere ≥ 0) from `initial` at t = 0.
pub fn propagate(model: &LinearModel, initial: &CMatrix, times: &[f64]) -> Result<Vec<CMatrix>> {
    let a = to_complex(&model.drift);
    // Propagate the deviation from the canonical commutator `C = iΩ/2`. Its source
    // `N + A C + C Aᵀ` vanishes identically for symplectic-consistent noise, so the large
    // canonical part never passes through the rounding of the exponential.
    let canonical = symplectic_half(model.dim() / 2).map(|x| Complex64::new(0.0, x));
    let source = &model.noise + &a * &canonical + &canonical * a.transpose();
    let mut out = Vec::with_capacity(times.len());
    let mut cache: Option<(f64, AffineMap)> = None;
    let mut m = initial - &canonical;
    let mut now = 0.0;
    for &t in times {
        if !(t >= now) {
            return Err(Error::Domain(format!("time grid must be non-decreasing and >= 0, got {t}")));
        }
        let dt = t - now;
        if dt > 0.0 {
            let reuse = matches!(&cache, Some((h, _)) if (h - dt).abs() <= 1e-12 * dt);
            if !reuse {
                cache = Some((dt, AffineMap::constant(&a, &source, dt)));
            }
            m = cache.as_ref().map(|(_, map)| map.apply(&m)).unwrap_or(m);
        }
        now = t;
        out.push(&m + &canonical);
    }
    Ok(out)
}

/// Stationary second moments from the Lyapunov equation `A M + M Aᵀ + N = 0`.
///
/// Solved directly as a dense Kronecker system, independently of [`propagate`].
pub fn lyapunov_steady_state(model: &LinearModel) -> Result<CMatrix> {
    model.check_stable()?;
    let n = model.dim();
    let a = to_complex(&model.drift);
    let eye = CMatrix::identity(n, n);
    // Column-major vec: vec(A M) = (I ⊗ A) vec M, vec(M Aᵀ) = (A ⊗ I) vec M.
    let op = eye.kronecker(&a) + a.kronecker(&eye);
    let rhs = -CMatrix::from_column_slice(n * n, 1, model.noise.as_slice());
    let lu = op.full_piv_lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Conditioning("Lyapunov operator is singular".into()))?;
    let m = CMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&m + m.adjoint()) * c(0.5))
}

/// Evolves `model` from `initial` and returns the readout occupation with derived quantities.
pub fn covariance_evolve(model: &LinearModel, initial: &CMatrix, times: &[f64]) -> Result<DynamicsSolution> {
    let moments = propagate(model, initial, times)?;
    let n_b: Vec<f64> = moments.iter().map(|m| model.occupation(m)).collect();
    let steady = if model.is_strictly_stable() {
        Extended::Finite(model.occupation(&lyapunov_steady_state(model)?))
    } else {
        model.check_stable()?;
        Extended::Infinite
    };
    Ok(DynamicsSolution::from_trajectory(times.to_vec(), n_b, steady))
}

/// Largest deviation of `Im M` from the canonical commutator over a set of moments.
pub fn commutator_drift(moments: &[CMatrix]) -> f64 {
    moments
        .iter()
        .map(|m| {
            let s = symplectic_half(m.nrows() / 2);
            m.map(|z| z.im).zip_map(&s, |x, y| (x - y).abs()).max()
        })
        .fold(0.0, f64::max)
}

/// Effective optomechanical coupling of the single-arm circuit in the linearized model.
pub fn rlc_coupling(drive: &DriveSpec, device: &Device) -> f64 {
    let r = &device.rates;
    let kappa = r.kappa();
    device.couplings.g1 * drive.alpha_sq.sqrt() / kappa * (r.gamma_t / drive.window).sqrt()
}

/// Linearized single-arm model: electrical mode (frame rotating at ω_s) and mechanical mode (lab frame).
///
/// Quadrature order `(x_a, p_a, x_b, p_b)`; the mechanical mode is the readout.
pub fn rlc_model(drive: &DriveSpec, device: &Device) -> Result<LinearModel> {
    let g = rlc_coupling(drive, device);
    let kappa = device.rates.kappa();
    let wm = device.omega_m;
    let gb = device.gamma_b;
    #[rustfmt::skip]
    let drift = DMatrix::from_row_slice(4, 4, &[
        -kappa / 2.0, 0.0,          2.0 * g,   0.0,
        0.0,          -kappa / 2.0, 0.0,       0.0,
        0.0,          0.0,          -gb / 2.0, wm,
        0.0,          -2.0 * g,     -wm,       -gb / 2.0,
    ]);
    let mut noise = CMatrix::zeros(4, 4);
    for (k, rate, occ) in [(0usize, kappa, device.n_bar_e), (1, gb, device.n_bar_m)] {
        let blk = damping_noise(rate, occ);
        for i in 0..2 {
            for j in 0..2 {
                noise[(2 * k + i, 2 * k + j)] = blk[i][j];
            }
        }
    }
    LinearModel::new(vec!["electrical".into(), "mechanical".into()], drift, noise, 1)
}

/// Initial state for [`rlc_model`]: electrical mode at its bath occupation, membrane with `n_b0`.
pub fn rlc_initial_state(device: &Device, n_b0: f64) -> CMatrix {
    thermal_state(&[device.n_bar_e, n_b0])
}
