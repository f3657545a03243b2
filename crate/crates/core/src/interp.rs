//! Monotone (shape-preserving) cubic Hermite interpolation.
//!
//! Node slopes follow the Fritsch-Carlson construction, so the interpolant
//! never overshoots between samples; evaluation outside the sampled range
//! clamps to the end values.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::config("interpolation nodes and values differ in length"));
        }
        if xs.len() < 2 {
            return Err(Error::config("interpolation needs at least two nodes"));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::config("interpolation nodes must be strictly increasing"));
            }
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            let (d0, d1) = (delta[i - 1], delta[i]);
            if d0 * d1 <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // weighted harmonic mean of the neighboring secants
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        slopes[0] = end_slope(h[0], h.get(1).copied(), delta[0], delta.get(1).copied());
        slopes[n - 1] = end_slope(
            h[n - 2],
            if n >= 3 { Some(h[n - 3]) } else { None },
            delta[n - 2],
            if n >= 3 { Some(delta[n - 3]) } else { None },
        );

        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.xs[lo + 1] - self.xs[lo];
        let t = (x - self.xs[lo]) / h;
        let (y0, y1) = (self.ys[lo], self.ys[lo + 1]);
        let (m0, m1) = (self.slopes[lo] * h, self.slopes[lo + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

/// One-sided three-point end slope with the usual monotonicity clamp.
fn end_slope(h0: f64, h1: Option<f64>, d0: f64, d1: Option<f64>) -> f64 {
    let (h1, d1) = match (h1, d1) {
        (Some(h1), Some(d1)) => (h1, d1),
        _ => return d0,
    };
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}
