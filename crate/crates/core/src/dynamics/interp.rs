//! Monotone piecewise-cubic (PCHIP) interpolation and level crossings.

/// Fritsch–Carlson slopes for a monotone-preserving Hermite cubic.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

/// Monotone cubic interpolant through `(x, y)`; `x` strictly increasing, at least two points.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Option<Self> {
        if x.len() < 2 || x.len() != y.len() || x.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        Some(Pchip {
            x: x.to_vec(),
            y: y.to_vec(),
            m: pchip_slopes(x, y),
        })
    }

    fn eval_in(&self, i: usize, t: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k => (k - 1).min(self.x.len() - 2),
        };
        self.eval_in(i, t)
    }

    /// First abscissa where the interpolant reaches `level`, by bisection inside the bracketing interval.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        let above0 = self.y[0] >= level;
        let i = (0..self.x.len() - 1).find(|&i| (self.y[i + 1] >= level) != above0)?;
        let (mut lo, mut hi) = (self.x[i], self.x[i + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (self.eval_in(i, mid) >= level) == above0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs() {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let x = [0.0, 1.0, 2.5, 4.0];
        let y = [1.0, 3.0, 6.0, 9.0];
        let p = Pchip::new(&x, &y).unwrap();
        for (a, b) in x.iter().zip(y) {
            assert!((p.eval(*a) - b).abs() < 1e-12);
        }
        let lin = Pchip::new(&x, &[0.0, 2.0, 5.0, 8.0]).unwrap();
        assert!((lin.eval(3.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_of_exponential_rise() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - (-t).exp()).collect();
        let p = Pchip::new(&x, &y).unwrap();
        let t = p.first_crossing(0.5).unwrap();
        assert!((t - std::f64::consts::LN_2).abs() < 1e-5);
    }
}
