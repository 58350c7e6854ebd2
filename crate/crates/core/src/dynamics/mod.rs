//! Numerical solvers for the linearized noisy dynamics of the membrane.
//!
//! - [`covariance`]: exact second-moment propagation of time-independent linear models,
//! - [`fourier`]: truncated Fourier-series solver for the balanced double arm,
//! - [`unbalanced`]: time-periodic simulator for the double arm with asymmetric elements.

pub mod covariance;
pub mod fourier;
pub mod interp;
pub mod unbalanced;

use serde::{Deserialize, Serialize};

use crate::extended::Extended;
use interp::Pchip;

/// Phonon-number trajectory and the quantities read off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSolution {
    pub times: Vec<f64>,
    pub n_b: Vec<f64>,
    /// Time at which n_b reaches half its steady state; `None` if not reached on the grid.
    pub t_half: Option<f64>,
    pub n_b_steady: Extended,
    /// Initial heating rate ∂n_b/∂t, 1/s.
    pub heating_rate: f64,
    pub warnings: Vec<String>,
}

impl DynamicsSolution {
    /// Builds a solution, extracting T½ by monotone cubic interpolation and the initial slope.
    pub fn from_trajectory(times: Vec<f64>, n_b: Vec<f64>, n_b_steady: Extended) -> Self {
        let t_half = match n_b_steady {
            Extended::Finite(s) => half_rise_time(&times, &n_b, s),
            Extended::Infinite => None,
        };
        let heating_rate = initial_slope(&times, &n_b);
        DynamicsSolution {
            times,
            n_b,
            t_half,
            n_b_steady,
            heating_rate,
            warnings: Vec::new(),
        }
    }
}

/// First time where the interpolated trajectory reaches `steady / 2`.
pub fn half_rise_time(times: &[f64], n_b: &[f64], steady: f64) -> Option<f64> {
    Pchip::new(times, n_b)?.first_crossing(steady / 2.0)
}

/// One-sided slope between the first two grid points.
fn initial_slope(times: &[f64], n_b: &[f64]) -> f64 {
    match (times.first(), times.get(1), n_b.first(), n_b.get(1)) {
        (Some(t0), Some(t1), Some(n0), Some(n1)) if t1 > t0 => (n1 - n0) / (t1 - t0),
        _ => 0.0,
    }
}

/// Evenly spaced grid on `[0, t_end]` with `points` samples.
pub fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}
