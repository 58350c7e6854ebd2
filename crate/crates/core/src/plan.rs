//! Optimization of the per-window heating for maximum visibility, experiment planning
//! (photon budget, power, window length) and parameter sweeps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::measure::{
    asymptotic_visibility, golden_minimize, mc_sample_outcomes, visibility_from_histogram, visibility_from_pdf,
    MeasurementConfig, OutcomeHistogram, ValleyRule,
};
use crate::metrics::{delta_nb, lambda_family, lambda_prime_and_occupation, probe_heating, DriveSpec};
use crate::params::{CircuitSpec, Device, MembraneSpec, CONSTANTS, HBAR};

/// Search interval for Δn_b.
pub const DELTA_NB_BOUNDS: (f64, f64) = (1e-5, 3.0);

/// Settings of the Monte-Carlo visibility scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McFitOptions {
    pub n_windows: u64,
    pub seed: u64,
    pub segments_per_window: u32,
    pub cutoff: u32,
    /// Explicit Δn_b grid; when empty, `points` values are log-spaced over
    /// [span.0, span.1] times the analytic optimum.
    pub grid: Vec<f64>,
    pub points: usize,
    pub span: (f64, f64),
}

impl Default for McFitOptions {
    fn default() -> Self {
        McFitOptions {
            n_windows: 100_000,
            seed: 0,
            segments_per_window: crate::measure::DEFAULT_SEGMENTS,
            cutoff: crate::measure::DEFAULT_CUTOFF,
            grid: Vec::new(),
            points: 9,
            span: (0.5, 1.8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizationMethod {
    AnalyticPdf,
    MonteCarloPolyFit(McFitOptions),
}

/// One Monte-Carlo visibility point of the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub delta_nb: f64,
    pub xi: f64,
    pub xi_uncertainty: f64,
}

/// Weighted quartic fit of the visibility scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    /// Coefficients in ascending powers of (Δn_b − center)/scale.
    pub coefficients: Vec<f64>,
    pub center: f64,
    pub scale: f64,
    pub points: Vec<ScanPoint>,
    /// Weighted residuals (data − fit)/uncertainty.
    pub residuals: Vec<f64>,
    pub reduced_chi_sq: f64,
    /// One-standard-deviation uncertainty of the fitted optimum.
    pub delta_nb_uncertainty: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub delta_nb_opt: f64,
    pub xi_max: f64,
    pub method: &'static str,
    pub fit: Option<PolyFit>,
}

/// Analytic visibility at a given Δn_b, with D² = λ′Δn_b.
pub fn analytic_visibility(lambda_prime: f64, n_eff: f64, delta_nb: f64) -> Result<f64> {
    let cfg = MeasurementConfig::new(lambda_prime, n_eff, delta_nb)?;
    Ok(visibility_from_pdf(&cfg, ValleyRule::Midpoint)?.xi)
}

/// Finds the Δn_b that maximizes the visibility for a given λ′ and N̄_eff.
pub fn optimize_delta_nb(lambda_prime: f64, n_eff: f64, method: &OptimizationMethod) -> Result<OptimizationResult> {
    if !(lambda_prime > 1.0) {
        return Err(Error::Domain(format!("lambda' = {lambda_prime} must exceed 1")));
    }
    if !(n_eff >= 0.0) {
        return Err(Error::Domain("N_eff must be >= 0".into()));
    }
    let analytic = analytic_optimum(lambda_prime, n_eff)?;
    match method {
        OptimizationMethod::AnalyticPdf => Ok(analytic),
        OptimizationMethod::MonteCarloPolyFit(opts) => mc_optimum(lambda_prime, n_eff, analytic.delta_nb_opt, opts),
    }
}

fn analytic_optimum(lambda_prime: f64, n_eff: f64) -> Result<OptimizationResult> {
    let (lo, hi) = DELTA_NB_BOUNDS;
    let neg = |x: f64| -analytic_visibility(lambda_prime, n_eff, x).unwrap_or(f64::NEG_INFINITY);
    // Coarse logarithmic bracket, then golden section inside it.
    const N: usize = 120;
    let grid: Vec<f64> = (0..=N).map(|i| lo * (hi / lo).powf(i as f64 / N as f64)).collect();
    let k = (0..=N).min_by(|&i, &j| neg(grid[i]).total_cmp(&neg(grid[j]))).unwrap();
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(N)];
    let tol = (1e-4f64).min(1e-4 * grid[k]);
    let x = golden_minimize(&neg, a, b, tol);
    Ok(OptimizationResult {
        delta_nb_opt: x,
        xi_max: -neg(x),
        method: "analytic_pdf",
        fit: None,
    })
}

/// Monte-Carlo visibility with Poisson uncertainty at one Δn_b.
pub fn mc_visibility(lambda_prime: f64, n_eff: f64, delta_nb: f64, opts: &McFitOptions) -> Result<ScanPoint> {
    let mut cfg = MeasurementConfig::new(lambda_prime, n_eff, delta_nb)?.with_sampling(opts.n_windows, opts.seed);
    cfg.segments_per_window = opts.segments_per_window;
    cfg.cutoff = opts.cutoff;
    let samples = mc_sample_outcomes(&cfg)?;
    let hist = OutcomeHistogram::for_config(&samples.values, &cfg)?;
    let vis = visibility_from_histogram(&hist, cfg.snr, ValleyRule::Midpoint)?;
    Ok(ScanPoint {
        delta_nb,
        xi: vis.xi,
        xi_uncertainty: vis.xi_uncertainty,
    })
}

fn mc_optimum(lambda_prime: f64, n_eff: f64, guess: f64, opts: &McFitOptions) -> Result<OptimizationResult> {
    let grid: Vec<f64> = if opts.grid.is_empty() {
        let n = opts.points.max(5);
        let (a, b) = (guess * opts.span.0, guess * opts.span.1);
        (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
    } else {
        opts.grid.clone()
    };
    if grid.len() < 5 {
        return Err(Error::FitFailure(format!("{} grid points cannot constrain a quartic", grid.len())));
    }
    let points = grid
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let point_opts = McFitOptions {
                seed: opts.seed.wrapping_add(k as u64),
                ..opts.clone()
            };
            mc_visibility(lambda_prime, n_eff, x, &point_opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let (fit, cov) = quartic_fit(points)?;
    let (x, sigma) = fit_vertex(&fit, &cov)?;
    let fit = PolyFit {
        delta_nb_uncertainty: sigma,
        ..fit
    };
    Ok(OptimizationResult {
        delta_nb_opt: x,
        xi_max: fit.eval(x),
        method: "monte_carlo_poly_fit",
        fit: Some(fit),
    })
}

/// Weighted least-squares quartic, returning the fit and its coefficient covariance
/// (inflated by the reduced χ² when that exceeds one).
fn quartic_fit(points: Vec<ScanPoint>) -> Result<(PolyFit, DMatrix<f64>)> {
    let xs: Vec<f64> = points.iter().map(|p| p.delta_nb).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let scale = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    let n = points.len();
    let floor = points.iter().map(|p| p.xi_uncertainty).fold(0.0, f64::max).max(1e-12) * 1e-3;
    let mut a = DMatrix::zeros(n, 5);
    let mut y = DVector::zeros(n);
    for (i, p) in points.iter().enumerate() {
        let w = 1.0 / p.xi_uncertainty.max(floor);
        let u = (p.delta_nb - center) / scale;
        for j in 0..5 {
            a[(i, j)] = u.powi(j as i32) * w;
        }
        y[i] = p.xi * w;
    }
    let normal = a.transpose() * &a;
    let inv = normal
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("normal equations are singular".into()))?;
    let c = &inv * a.transpose() * &y;
    let resid = &y - &a * &c;
    let dof = (n as f64 - 5.0).max(1.0);
    let chi = resid.norm_squared() / dof;
    let cov = inv * chi.max(1.0);
    let fit = PolyFit {
        coefficients: c.iter().copied().collect(),
        center,
        scale,
        points,
        residuals: resid.iter().copied().collect(),
        reduced_chi_sq: chi,
        delta_nb_uncertainty: f64::NAN,
    };
    Ok((fit, cov))
}

/// Maximum of the fitted quartic inside the scanned range and its delta-method uncertainty.
fn fit_vertex(fit: &PolyFit, cov: &DMatrix<f64>) -> Result<(f64, f64)> {
    let c = &fit.coefficients;
    let d1 = |u: f64| c[1] + 2.0 * c[2] * u + 3.0 * c[3] * u * u + 4.0 * c[4] * u.powi(3);
    let d2 = |u: f64| 2.0 * c[2] + 6.0 * c[3] * u + 12.0 * c[4] * u * u;
    // Locate sign changes of the derivative on a fine grid, keep maxima.
    const N: usize = 2000;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..N {
        let (u0, u1) = (-1.0 + 2.0 * i as f64 / N as f64, -1.0 + 2.0 * (i + 1) as f64 / N as f64);
        if d1(u0) > 0.0 && d1(u1) <= 0.0 {
            let (mut a, mut b) = (u0, u1);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if d1(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let u = 0.5 * (a + b);
            let val = fit.eval(fit.center + u * fit.scale);
            if best.is_none_or(|(_, v)| val > v) {
                best = Some((u, val));
            }
        }
    }
    let (u, _) = best.ok_or_else(|| {
        Error::FitFailure(format!(
            "fitted visibility has no interior maximum (coefficients {:?}, reduced chi^2 {:.3})",
            fit.coefficients, fit.reduced_chi_sq
        ))
    })?;
    let curv = d2(u);
    if !(curv < 0.0) {
        return Err(Error::FitFailure("no negative curvature at the fitted optimum".into()));
    }
    let grad = DVector::from_iterator(5, (0..5).map(|j| if j == 0 { 0.0 } else { -(j as f64) * u.powi(j - 1) / curv }));
    let var = (grad.transpose() * cov * &grad)[(0, 0)];
    Ok((fit.center + u * fit.scale, var.max(0.0).sqrt() * fit.scale))
}

/// The three linked planning quantities; exactly one must be left free.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanTargets {
    /// Electrically induced heating per window, Δn_b^(el).
    pub delta_nb_electrical: Option<f64>,
    /// Effective temperature N̄_e of the electrically induced reservoir.
    pub n_e: Option<f64>,
    /// Measurement time T, s.
    pub window: Option<f64>,
}

impl PlanTargets {
    /// Equal electrical and mechanical heating (N̄_eff = 2n̄_m) for a total Δn_b:
    /// T = Δn_b/(2γ_b n̄_m) and Δn_b^(el) = Δn_b/2.
    pub fn balanced(delta_nb_total: f64, device: &Device) -> Result<Self> {
        let rate = device.gamma_b * device.n_bar_m;
        if !(rate > 0.0) {
            return Err(Error::Infeasible("balanced heating needs a warm damped membrane (gamma_b * n_bar_m > 0)".into()));
        }
        Ok(PlanTargets {
            delta_nb_electrical: Some(0.5 * delta_nb_total),
            n_e: None,
            window: Some(delta_nb_total / (2.0 * rate)),
        })
    }
}

/// Drive and window realizing the targets, with the resulting figures of merit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub alpha_sq_total: f64,
    pub flux: f64,
    pub window: f64,
    pub p_in: f64,
    pub intracavity_photons: f64,
    pub n_e: f64,
    pub delta_nb_electrical: f64,
    pub delta_nb_mechanical: f64,
    pub lambda: Extended,
    pub lambda_prime: Extended,
    pub n_eff: Extended,
    /// Bath occupation n̄_m of the membrane (echo).
    pub n_bar_m: f64,
    /// Highest cryostat temperature at which n̄_m stays below N̄_e, K.
    pub max_bath_temperature: f64,
    /// g₁ ≥ γ_t.
    pub strong_coupling: bool,
    /// False when the drive vanishes and only the bath heats the membrane.
    pub qnd: bool,
}

/// Solves the heating relations for the free member of `targets` and reports the full plan.
///
/// Electrical heating is proportional to the photon number and the probe damping to the flux,
/// so Δn^(el) = k·flux·T and N̄_e = k·flux/(γ_b + c·flux).
pub fn plan_experiment(device: &Device, targets: &PlanTargets) -> Result<ExperimentPlan> {
    let free = [targets.delta_nb_electrical.is_none(), targets.n_e.is_none(), targets.window.is_none()];
    if free.iter().filter(|&&f| f).count() != 1 {
        return Err(Error::config("plan.targets", "exactly one of delta_nb_electrical, n_e, window must be omitted"));
    }
    let per_photon = delta_nb(&DriveSpec::new(1.0, 1.0), device).electrical();
    let per_flux = probe_heating(&DriveSpec::from_flux(1.0, 1.0), device);
    let gb = device.gamma_b;
    let flux_for_ne = |ne: f64| -> Result<f64> {
        let headroom = per_photon - ne * per_flux;
        if !(ne >= 0.0) {
            return Err(Error::config("plan.targets.n_e", "must be >= 0"));
        }
        if !(headroom > 0.0) || (ne > 0.0 && gb == 0.0) {
            return Err(Error::Infeasible(format!(
                "N_e = {ne} is unreachable: the probe damping caps it at {:.6e}",
                per_photon / per_flux.max(f64::MIN_POSITIVE)
            )));
        }
        Ok(ne * gb / headroom)
    };
    let (flux, window) = match (targets.delta_nb_electrical, targets.n_e, targets.window) {
        (Some(dn), None, Some(t)) => {
            check_window(t)?;
            (dn / (per_photon * t), t)
        }
        (Some(dn), Some(ne), None) => {
            let flux = flux_for_ne(ne)?;
            if flux == 0.0 {
                return Err(Error::Infeasible("zero drive cannot deliver electrical heating".into()));
            }
            (flux, dn / (per_photon * flux))
        }
        (None, Some(ne), Some(t)) => {
            check_window(t)?;
            (flux_for_ne(ne)?, t)
        }
        _ => unreachable!(),
    };
    if !(flux >= 0.0 && flux.is_finite()) {
        return Err(Error::Infeasible(format!("required flux {flux} is not physical")));
    }
    Ok(evaluate_plan(device, flux, window))
}

fn check_window(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::config("plan.targets.window", "must be > 0"))
    }
}

/// Plan figures for a given flux and window.
pub fn evaluate_plan(device: &Device, flux: f64, window: f64) -> ExperimentPlan {
    let drive = DriveSpec::from_flux(flux, window);
    let budget = delta_nb(&drive, device);
    let big = probe_heating(&drive, device);
    let family = lambda_family(device);
    let renorm = lambda_prime_and_occupation(family.lambda, &budget, device.n_bar_m, window, device.gamma_b, big);
    let n_e = budget.electrical() / (window * (device.gamma_b + big));
    let max_bath_temperature = if n_e > 0.0 {
        HBAR * device.omega_m / (CONSTANTS.k_boltzmann * (1.0 + 1.0 / n_e).ln())
    } else {
        0.0
    };
    ExperimentPlan {
        alpha_sq_total: drive.alpha_sq,
        flux,
        window,
        p_in: HBAR * device.rates.omega_s * flux,
        intracavity_photons: flux / device.rates.gamma_t,
        n_e,
        delta_nb_electrical: budget.electrical(),
        delta_nb_mechanical: budget.mechanical,
        lambda: family.lambda,
        lambda_prime: renorm.lambda_prime,
        n_eff: renorm.n_eff,
        n_bar_m: device.n_bar_m,
        max_bath_temperature,
        strong_coupling: device.couplings.g1 >= device.rates.gamma_t,
        qnd: flux > 0.0,
    }
}

/// Stray-to-rest capacitance ratio below which g₁(C_s) = g₁·C₀/(C₀ + C_s) reaches γ_t.
pub fn strong_coupling_boundary(g1_bare: f64, gamma_t: f64) -> f64 {
    g1_bare / gamma_t - 1.0
}

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// C_s/C₀.
    CsOverC0,
    /// Mechanical quality factor.
    Q,
    /// δg₁/g₁, which sets g_r for a balanced capacitance.
    GrOverG1,
    /// λ′, with the visibility optimized at each point.
    LambdaPrime,
}

/// How the window and drive are chosen at each device sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    Fixed(PlanTargets),
    /// Equal electrical and mechanical heating at a total Δn_b.
    Balanced { delta_nb_total: f64 },
}

/// Inputs shared by every sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTemplate {
    pub circuit: CircuitSpec,
    pub membrane: MembraneSpec,
    pub delta_g1_rel: f64,
    pub targets: TargetRule,
    /// N̄_eff used along a λ′ axis.
    pub n_eff: f64,
    /// Monte-Carlo check at each λ′ optimum; skipped when `None`.
    pub mc: Option<McFitOptions>,
}

/// Column-major description of a sweep result; every grid point yields one row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// One entry per column; `None` where the point failed before the value was known.
    pub values: Vec<Option<f64>>,
    pub error: Option<String>,
}

const PLAN_COLUMNS: [&str; 16] = [
    "axis_value",
    "g1",
    "g2",
    "g_r",
    "strong_coupling",
    "lambda",
    "lambda_prime",
    "n_eff",
    "window",
    "flux",
    "alpha_sq",
    "p_in",
    "intracavity_photons",
    "n_e",
    "delta_nb_electrical",
    "delta_nb_mechanical",
];

const VISIBILITY_COLUMNS: [&str; 7] = [
    "lambda_prime",
    "n_eff",
    "delta_nb_opt",
    "xi_analytic",
    "xi_asymptotic",
    "xi_mc",
    "poisson_err",
];

/// Evaluates the template at each grid value, concurrently, keeping grid order.
pub fn sweep(template: &SweepTemplate, axis: SweepAxis, grid: &[f64]) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::config("sweep.grid", "must not be empty"));
    }
    let monotone = grid.windows(2).all(|w| w[1] > w[0]) || grid.windows(2).all(|w| w[1] < w[0]);
    if !monotone {
        return Err(Error::config("sweep.grid", "must be strictly monotone"));
    }
    if axis == SweepAxis::LambdaPrime {
        return visibility_sweep(grid, template.n_eff, template.mc.as_ref());
    }
    Ok(tabulate(PLAN_COLUMNS.to_vec(), grid, |x| plan_row(template, axis, x)))
}

/// Optimized visibility along a λ′ grid at fixed N̄_eff; no device is involved.
pub fn visibility_sweep(grid: &[f64], n_eff: f64, mc: Option<&McFitOptions>) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::config("sweep.grid", "must not be empty"));
    }
    Ok(tabulate(VISIBILITY_COLUMNS.to_vec(), grid, |x| visibility_row(x, n_eff, mc)))
}

fn tabulate(columns: Vec<&'static str>, grid: &[f64], f: impl Fn(f64) -> Result<Vec<f64>> + Sync) -> SweepTable {
    let width = columns.len();
    let rows = grid
        .par_iter()
        .map(|&x| {
            match f(x) {
                Ok(values) => SweepRow {
                    values: values.into_iter().map(Some).collect(),
                    error: None,
                },
                Err(e) => {
                    let mut values = vec![None; width];
                    values[0] = Some(x);
                    SweepRow {
                        values,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    SweepTable { columns, rows }
}

fn finite_or_inf(x: Extended) -> f64 {
    x.finite().unwrap_or(f64::INFINITY)
}

fn plan_row(template: &SweepTemplate, axis: SweepAxis, x: f64) -> Result<Vec<f64>> {
    let mut circuit = template.circuit.clone();
    let mut membrane = template.membrane.clone();
    let mut dg = template.delta_g1_rel;
    match axis {
        SweepAxis::CsOverC0 => circuit.stray_cs = x * circuit.c0,
        SweepAxis::Q => {
            membrane.quality_q = Some(x);
            membrane.gamma_b = None;
        }
        SweepAxis::GrOverG1 => dg = x,
        SweepAxis::LambdaPrime => unreachable!(),
    }
    let (device, _) = Device::from_specs(&circuit, &membrane, dg)?;
    let targets = match template.targets {
        TargetRule::Fixed(t) => t,
        TargetRule::Balanced { delta_nb_total } => PlanTargets::balanced(delta_nb_total, &device)?,
    };
    let p = plan_experiment(&device, &targets)?;
    let c = device.couplings;
    Ok(vec![
        x,
        c.g1,
        c.g2,
        c.g_r,
        if p.strong_coupling { 1.0 } else { 0.0 },
        finite_or_inf(p.lambda),
        finite_or_inf(p.lambda_prime),
        finite_or_inf(p.n_eff),
        p.window,
        p.flux,
        p.alpha_sq_total,
        p.p_in,
        p.intracavity_photons,
        p.n_e,
        p.delta_nb_electrical,
        p.delta_nb_mechanical,
    ])
}

fn visibility_row(lambda_prime: f64, n_eff: f64, mc: Option<&McFitOptions>) -> Result<Vec<f64>> {
    let opt = optimize_delta_nb(lambda_prime, n_eff, &OptimizationMethod::AnalyticPdf)?;
    let asym = asymptotic_visibility(lambda_prime, n_eff)?;
    let (xi_mc, err) = match mc {
        Some(opts) => {
            let p = mc_visibility(lambda_prime, n_eff, opt.delta_nb_opt, opts)?;
            (p.xi, p.xi_uncertainty)
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(vec![lambda_prime, n_eff, opt.delta_nb_opt, opt.xi_max, asym, xi_mc, err])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_matches_rescaling() {
        let g1 = 5.0;
        let gt = 1.0;
        let r = strong_coupling_boundary(g1, gt);
        assert!((g1 / (1.0 + r) - gt).abs() < 1e-12);
    }

    #[test]
    fn analytic_optimum_is_interior() {
        let r = optimize_delta_nb(100.0, 1.0, &OptimizationMethod::AnalyticPdf).unwrap();
        assert!(r.delta_nb_opt > 0.1 && r.delta_nb_opt < 0.5);
        assert!(r.xi_max > 0.0 && r.xi_max < 1.0);
    }
}
