//! Measurement statistics: the single-jump outcome density, jump Monte-Carlo sampling of
//! homodyne outcomes, histograms and the peak/valley visibility.
//!
//! Outcomes are expressed in units of the homodyne noise σ, so the n_b = 1 peak sits at
//! v = D = √(λ′·Δn_b).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Default number of segments each window is split into for multi-jump sampling.
pub const DEFAULT_SEGMENTS: u32 = 64;
/// Default Fock-space cutoff of the sampled jump chain.
pub const DEFAULT_CUTOFF: u32 = 12;
/// Histogram bin width in units of σ.
pub const BIN_WIDTH: f64 = 0.125;

/// Parameters of one measurement protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub lambda_prime: f64,
    /// Thermal occupation of the probed equilibrium state.
    pub n_bar: f64,
    /// Ground-state heating per window.
    pub delta_nb: f64,
    /// Signal-to-noise ratio D = d/σ.
    pub snr: f64,
    pub segments_per_window: u32,
    pub n_windows: u64,
    /// Highest Fock state the sampled chain may reach.
    pub cutoff: u32,
    pub seed: u64,
}

impl MeasurementConfig {
    /// Configuration with D = √(λ′Δn_b) and default sampling settings.
    pub fn new(lambda_prime: f64, n_bar: f64, delta_nb: f64) -> Result<Self> {
        let cfg = MeasurementConfig {
            lambda_prime,
            n_bar,
            delta_nb,
            snr: (lambda_prime * delta_nb).sqrt(),
            segments_per_window: DEFAULT_SEGMENTS,
            n_windows: 100_000,
            cutoff: DEFAULT_CUTOFF,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sampling(mut self, n_windows: u64, seed: u64) -> Self {
        self.n_windows = n_windows;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_prime > 0.0) {
            return Err(Error::config("measurement.lambda_prime", "must be > 0"));
        }
        if !(self.n_bar >= 0.0) {
            return Err(Error::config("measurement.n_eff", "must be >= 0"));
        }
        if !(self.delta_nb >= 0.0) {
            return Err(Error::config("measurement.delta_nb", "must be >= 0"));
        }
        let implied = (self.lambda_prime * self.delta_nb).sqrt();
        if (self.snr - implied).abs() > 1e-9 * implied.max(1e-300) {
            return Err(Error::config(
                "measurement.snr",
                format!("D = {} inconsistent with sqrt(lambda' * delta_nb) = {implied}", self.snr),
            ));
        }
        if self.segments_per_window == 0 {
            return Err(Error::config("measurement.segments_per_window", "must be >= 1"));
        }
        if self.cutoff < 2 {
            return Err(Error::config("measurement.hilbert_cutoff", "must be >= 2"));
        }
        Ok(())
    }
}

/// Weights of the two-peak density: no-jump peaks at 0 and D plus the single-jump bridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakWeights {
    pub ground: f64,
    pub excited: f64,
    pub bridge: f64,
}

impl PeakWeights {
    pub fn total(&self) -> f64 {
        self.ground + self.excited + self.bridge
    }
}

/// Peak and bridge weights of the single-jump density.
///
/// The excited-state terms vanish continuously as n̄ → 0 and are evaluated as zero there.
pub fn peak_weights(n_bar: f64, delta_nb: f64) -> PeakWeights {
    let p = 1.0 + n_bar;
    let ground = (-delta_nb).exp() / p;
    let (excited, bridge_excited) = if n_bar > 0.0 {
        let exit = delta_nb * (3.0 + 1.0 / n_bar);
        let stay = (-exit).exp();
        let denom = 1.0 + (-delta_nb * (1.0 - 1.0 / n_bar)).exp();
        (n_bar * stay / (p * p), n_bar * (-exit).exp_m1().abs() / denom)
    } else {
        (0.0, 0.0)
    };
    let bridge = (p * (-(-delta_nb).exp_m1()) + bridge_excited) / (p * p);
    PeakWeights { ground, excited, bridge }
}

fn gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Unit-mass bridge shape between the two peaks.
fn bridge_shape(v: f64, snr: f64) -> f64 {
    if snr == 0.0 {
        return gaussian(v);
    }
    (erf(v / SQRT_2) - erf((v - snr) / SQRT_2)) / (2.0 * snr)
}

/// Single-jump outcome density as written, without renormalization. Its total mass is
/// [`PeakWeights::total`], which is below one because states above n_b = 1 are left out.
pub fn single_jump_pdf_raw(v: f64, cfg: &MeasurementConfig) -> f64 {
    let w = peak_weights(cfg.n_bar, cfg.delta_nb);
    w.ground * gaussian(v) + w.excited * gaussian(v - cfg.snr) + w.bridge * bridge_shape(v, cfg.snr)
}

/// Single-jump outcome density normalized to unit mass.
pub fn single_jump_pdf(v: f64, cfg: &MeasurementConfig) -> f64 {
    single_jump_pdf_raw(v, cfg) / peak_weights(cfg.n_bar, cfg.delta_nb).total()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2))
}

/// Cumulative mass of [`single_jump_pdf_raw`] up to `v`.
pub fn single_jump_cdf_raw(v: f64, cfg: &MeasurementConfig) -> f64 {
    let w = peak_weights(cfg.n_bar, cfg.delta_nb);
    let d = cfg.snr;
    let bridge = if d == 0.0 {
        normal_cdf(v)
    } else {
        let anti = |x: f64| x * erf(x / SQRT_2) + (2.0 / PI).sqrt() * (-0.5 * x * x).exp();
        0.5 + (anti(v) - anti(v - d)) / (2.0 * d)
    };
    w.ground * normal_cdf(v) + w.excited * normal_cdf(v - d) + w.bridge * bridge
}

/// Density sampled on a uniform grid, as (v/σ, density) rows.
pub fn pdf_curve(cfg: &MeasurementConfig, v_min: f64, v_max: f64, points: usize) -> Vec<(f64, f64)> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let v = v_min + (v_max - v_min) * i as f64 / (n - 1) as f64;
            (v, single_jump_pdf(v, cfg))
        })
        .collect()
}

/// One sampled window.
#[derive(Debug, Clone, Copy, PartialEq)]
struct WindowOutcome {
    value: f64,
    jumps: u32,
    clipped: bool,
}

/// Monte-Carlo outcome set.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSamples {
    /// V_M/σ per window, in window order.
    pub values: Vec<f64>,
    /// Windows whose trajectory hit the Fock cutoff.
    pub cutoff_hits: u64,
    /// Total number of jumps over all windows.
    pub total_jumps: u64,
    pub warnings: Vec<String>,
}

/// Generator for one window: ChaCha8 keyed by the run seed, stream selected by the window index.
fn window_rng(seed: u64, window: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(window);
    rng
}

fn thermal_draw(rng: &mut ChaCha8Rng, n_bar: f64, cutoff: u32) -> (u32, bool) {
    if n_bar <= 0.0 {
        return (0, false);
    }
    let q = n_bar / (1.0 + n_bar);
    let u: f64 = rng.random();
    // P(i >= k) = q^k, so i = floor(ln u / ln q).
    let k = (u.ln() / q.ln()).floor();
    if k >= cutoff as f64 {
        (cutoff, true)
    } else {
        (k as u32, false)
    }
}

/// Per-window jump rates (in units of 1/T) out of Fock state `i`.
fn jump_rates(i: u32, n_bar: f64, delta_nb: f64) -> (f64, f64) {
    let up = (i as f64 + 1.0) * delta_nb;
    let down = if i == 0 || delta_nb == 0.0 {
        0.0
    } else if n_bar == 0.0 {
        f64::INFINITY
    } else {
        i as f64 * delta_nb * (1.0 + 1.0 / n_bar)
    };
    (up, down)
}

fn sample_window(cfg: &MeasurementConfig, window: u64) -> WindowOutcome {
    let mut rng = window_rng(cfg.seed, window);
    let (mut state, mut clipped) = thermal_draw(&mut rng, cfg.n_bar, cfg.cutoff);
    let segments = cfg.segments_per_window;
    let dt = 1.0 / segments as f64;
    let mut occupancy = 0.0;
    let mut jumps = 0;
    for _ in 0..segments {
        let (mut up, down) = jump_rates(state, cfg.n_bar, cfg.delta_nb);
        if state >= cfg.cutoff {
            up = 0.0;
        }
        let total = up + down;
        let p_jump = if total.is_infinite() { 1.0 } else { -(-total * dt).exp_m1() };
        let u: f64 = rng.random();
        if total > 0.0 && u < p_jump {
            // At most one jump per segment, placed uniformly inside it.
            let at: f64 = rng.random();
            let goes_up = if down.is_infinite() { false } else { rng.random::<f64>() * total < up };
            let next = if goes_up { state + 1 } else { state - 1 };
            occupancy += (at * state as f64 + (1.0 - at) * next as f64) * dt;
            state = next;
            jumps += 1;
            if state >= cfg.cutoff {
                clipped = true;
            }
        } else {
            occupancy += state as f64 * dt;
        }
    }
    let noise: f64 = rng.sample(StandardNormal);
    WindowOutcome {
        value: occupancy * cfg.snr + noise,
        jumps,
        clipped,
    }
}

/// Samples one homodyne outcome per window from jump trajectories.
///
/// Every window draws from its own counter-selected stream, so results do not depend on
/// the number of worker threads or on scheduling order.
pub fn mc_sample_outcomes(cfg: &MeasurementConfig) -> Result<OutcomeSamples> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if cfg.segments_per_window < 8 {
        warnings.push(format!(
            "segments_per_window = {} allows at most that many jumps per window",
            cfg.segments_per_window
        ));
    }
    let outcomes: Vec<WindowOutcome> = (0..cfg.n_windows).into_par_iter().map(|w| sample_window(cfg, w)).collect();
    let cutoff_hits = outcomes.iter().filter(|o| o.clipped).count() as u64;
    let total_jumps = outcomes.iter().map(|o| o.jumps as u64).sum();
    if cutoff_hits > 0 {
        warnings.push(format!("{cutoff_hits} windows reached the Fock cutoff {}", cfg.cutoff));
    }
    Ok(OutcomeSamples {
        values: outcomes.into_iter().map(|o| o.value).collect(),
        cutoff_hits,
        total_jumps,
        warnings,
    })
}

/// Binned outcomes in units of σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeHistogram {
    /// Bin edges, one more than the number of bins.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// All samples, including those outside the binned range.
    pub total: u64,
    pub underflow: u64,
    pub overflow: u64,
}

impl OutcomeHistogram {
    /// Uniform bins of width `width` covering [lo, hi].
    pub fn from_samples(values: &[f64], lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(hi > lo) || !(width > 0.0) {
            return Err(Error::Domain(format!("invalid histogram range [{lo}, {hi}] / width {width}")));
        }
        let bins = ((hi - lo) / width).ceil() as usize;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        let (mut underflow, mut overflow) = (0, 0);
        for &v in values {
            if v < lo {
                underflow += 1;
            } else {
                let k = ((v - lo) / width).floor() as usize;
                if k >= bins {
                    overflow += 1;
                } else {
                    counts[k] += 1;
                }
            }
        }
        Ok(OutcomeHistogram {
            edges,
            counts,
            total: values.len() as u64,
            underflow,
            overflow,
        })
    }

    /// Default binning for a configuration: width σ/8 over [−3σ, D·N_p + 3σ].
    pub fn for_config(values: &[f64], cfg: &MeasurementConfig) -> Result<Self> {
        Self::from_samples(values, -3.0, cfg.snr * cfg.cutoff as f64 + 3.0, BIN_WIDTH)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.edges[k] + self.edges[k + 1])
    }

    /// Estimated probability density in bin `k`.
    pub fn density(&self, k: usize) -> f64 {
        self.counts[k] as f64 / (self.total as f64 * self.width(k))
    }

    /// Poisson standard error of [`Self::density`].
    pub fn density_error(&self, k: usize) -> f64 {
        (self.counts[k] as f64).sqrt() / (self.total as f64 * self.width(k))
    }

    fn bin_of(&self, v: f64) -> Option<usize> {
        let lo = self.edges[0];
        let k = ((v - lo) / self.width(0)).floor();
        (k >= 0.0 && (k as usize) < self.bins()).then_some(k as usize)
    }

    /// Three-bin moving average of the density and its propagated error.
    fn smoothed(&self, k: usize) -> (f64, f64) {
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(self.bins() - 1);
        let n = (hi - lo + 1) as f64;
        let (mut s, mut e2) = (0.0, 0.0);
        for j in lo..=hi {
            s += self.density(j);
            e2 += self.density_error(j).powi(2);
        }
        (s / n, e2.sqrt() / n)
    }
}

/// How the valley density I_R between the two peaks is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValleyRule {
    /// Density halfway between the peaks.
    #[default]
    Midpoint,
    /// Lowest density strictly between the peaks; errors if there is no interior minimum.
    Minimum,
}

/// Peak-to-valley contrast of an outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityResult {
    pub i0: f64,
    pub i1: f64,
    pub i_r: f64,
    /// Where I_R was taken, in units of σ.
    pub valley_position: f64,
    pub xi: f64,
    pub xi_uncertainty: f64,
    /// Set when the result is the optimum of a Δn_b search.
    pub optimal: bool,
}

fn contrast(i0: f64, i1: f64, ir: f64) -> f64 {
    let m = 0.5 * (i0 + i1);
    if m + ir == 0.0 {
        0.0
    } else {
        (m - ir) / (m + ir)
    }
}

fn contrast_error(i0: f64, i1: f64, ir: f64, e0: f64, e1: f64, er: f64) -> f64 {
    let m = 0.5 * (i0 + i1);
    let s = (m + ir).powi(2);
    if s == 0.0 {
        return 0.0;
    }
    let em = 0.5 * (e0 * e0 + e1 * e1).sqrt();
    let dm = 2.0 * ir / s;
    let dr = 2.0 * m / s;
    ((dm * em).powi(2) + (dr * er).powi(2)).sqrt()
}

/// Visibility of the analytic single-jump density, with peaks at v = 0 and v = D.
pub fn visibility_from_pdf(cfg: &MeasurementConfig, rule: ValleyRule) -> Result<VisibilityResult> {
    let d = cfg.snr;
    let f = |v: f64| single_jump_pdf_raw(v, cfg);
    let (i0, i1) = (f(0.0), f(d));
    let (pos, ir) = match rule {
        ValleyRule::Midpoint => (0.5 * d, f(0.5 * d)),
        ValleyRule::Minimum => interior_minimum(&f, 0.0, d)?,
    };
    let norm = peak_weights(cfg.n_bar, cfg.delta_nb).total();
    Ok(VisibilityResult {
        i0: i0 / norm,
        i1: i1 / norm,
        i_r: ir / norm,
        valley_position: pos,
        xi: contrast(i0, i1, ir),
        xi_uncertainty: 0.0,
        optimal: false,
    })
}

/// Interior local minimum of `f` on (a, b) by grid scan and golden-section refinement.
fn interior_minimum(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    const N: usize = 400;
    let h = (b - a) / N as f64;
    let vals: Vec<f64> = (0..=N).map(|i| f(a + i as f64 * h)).collect();
    let k = (1..N)
        .filter(|&i| vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1])
        .min_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        .ok_or_else(|| Error::DegenerateValley(format!("no local minimum between {a} and {b}")))?;
    let x = golden_minimize(f, a + (k - 1) as f64 * h, a + (k + 1) as f64 * h, 1e-10 * (b - a).abs().max(1.0));
    Ok((x, f(x)))
}

/// Golden-section minimization on [a, b].
pub(crate) fn golden_minimize(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Visibility of a histogram whose peaks are expected at v = 0 and v = `snr`.
///
/// Peak densities are the largest three-bin averages within ±σ/2 of the expected positions.
pub fn visibility_from_histogram(hist: &OutcomeHistogram, snr: f64, rule: ValleyRule) -> Result<VisibilityResult> {
    let peak = |at: f64| -> Result<(usize, f64, f64)> {
        let lo = hist.bin_of(at - 0.5).unwrap_or(0);
        let hi = hist
            .bin_of(at + 0.5)
            .ok_or_else(|| Error::Domain(format!("peak position {at} outside the histogram range")))?;
        let mut best = (lo, f64::NEG_INFINITY, 0.0);
        for k in lo..=hi {
            let (s, e) = hist.smoothed(k);
            if s > best.1 {
                best = (k, s, e);
            }
        }
        Ok(best)
    };
    let (k0, i0, e0) = peak(0.0)?;
    let (k1, i1, e1) = peak(snr)?;
    let (kr, ir, er) = match rule {
        ValleyRule::Midpoint => {
            let k = hist
                .bin_of(0.5 * snr)
                .ok_or_else(|| Error::Domain("valley outside the histogram range".into()))?;
            let (s, e) = hist.smoothed(k);
            (k, s, e)
        }
        ValleyRule::Minimum => {
            if k1 <= k0 + 1 {
                return Err(Error::DegenerateValley("peaks fall in adjacent bins".into()));
            }
            let (k, s, e) = ((k0 + 1)..k1)
                .map(|k| {
                    let (s, e) = hist.smoothed(k);
                    (k, s, e)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty range");
            if s >= i0.min(i1) {
                return Err(Error::DegenerateValley("no dip between the peaks".into()));
            }
            (k, s, e)
        }
    };
    Ok(VisibilityResult {
        i0,
        i1,
        i_r: ir,
        valley_position: hist.center(kr),
        xi: contrast(i0, i1, ir),
        xi_uncertainty: contrast_error(i0, i1, ir, e0, e1, er),
        optimal: false,
    })
}

/// Large-λ′ visibility ξ ≈ 1 − 8·(3 + 5N)/(1 + 2N)·√(π ln λ′)/λ′.
pub fn asymptotic_visibility(lambda_prime: f64, n_eff: f64) -> Result<f64> {
    if !(lambda_prime > 1.0) {
        return Err(Error::Domain(format!("lambda' = {lambda_prime} must exceed 1")));
    }
    Ok(1.0 - 8.0 * (3.0 + 5.0 * n_eff) / (1.0 + 2.0 * n_eff) * (PI * lambda_prime.ln()).sqrt() / lambda_prime)
}

/// Kolmogorov–Smirnov distance between samples and the raw single-jump density, taken over
/// the two-peak domain v ≤ D where the single-jump model applies. Both cumulative curves are
/// left unnormalized so that mass above the n_b = 1 peak does not enter.
pub fn ks_two_peak(values: &[f64], cfg: &MeasurementConfig) -> f64 {
    let d = cfg.snr;
    let n = values.len() as f64;
    let mut inside: Vec<f64> = values.iter().copied().filter(|&v| v <= d).collect();
    inside.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for (i, &v) in inside.iter().enumerate() {
        let model = single_jump_cdf_raw(v, cfg);
        worst = worst.max((model - i as f64 / n).abs()).max((model - (i + 1) as f64 / n).abs());
    }
    worst.max((single_jump_cdf_raw(d, cfg) - inside.len() as f64 / n).abs())
}
