//! Interpolants used by the radial profile and the circle maps.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Complex;

/// Monotone piecewise-cubic Hermite interpolant on an increasing grid.
///
/// Slopes are either supplied (exact derivatives) or estimated with the
/// Fritsch-Butland harmonic mean; in both cases the Fritsch-Carlson limiter
/// is applied so strictly increasing data yields a strictly increasing
/// interpolant. Outside the grid the interpolant continues affinely with the
/// end slopes.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>, slopes: Option<Vec<f64>>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidParameter(
                "monotone cubic needs at least two matching samples".into(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        if let Some(i) = (0..n - 1).find(|&i| y[i + 1] <= y[i]) {
            return Err(Error::NonMonotone(format!(
                "value at node {} ({}) does not exceed node {} ({})",
                i + 1,
                y[i + 1],
                i,
                y[i]
            )));
        }
        let secants: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut m = match slopes {
            Some(s) => {
                if s.len() != n {
                    return Err(Error::InvalidParameter("slope count mismatch".into()));
                }
                s
            }
            None => {
                let mut m = vec![0.0; n];
                m[0] = secants[0];
                m[n - 1] = secants[n - 2];
                for i in 1..n - 1 {
                    let (a, b) = (secants[i - 1], secants[i]);
                    m[i] = 2.0 * a * b / (a + b);
                }
                m
            }
        };
        for i in 0..n - 1 {
            let s = secants[i];
            let a = m[i] / s;
            let b = m[i + 1] / s;
            if a < 0.0 {
                m[i] = 0.0;
            }
            if b < 0.0 {
                m[i + 1] = 0.0;
            }
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                m[i] = tau * a * s;
                m[i + 1] = tau * b * s;
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn grid(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.m
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t);
        i.clamp(1, n - 1) - 1
    }

    /// Value and derivative at `t`.
    pub fn eval_with_slope(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        if t <= self.x[0] {
            return (self.y[0] + self.m[0] * (t - self.x[0]), self.m[0]);
        }
        if t >= self.x[n - 1] {
            return (self.y[n - 1] + self.m[n - 1] * (t - self.x[n - 1]), self.m[n - 1]);
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i] * h, self.m[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let d = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        (v, d)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_slope(t).0
    }

    /// Solves `eval(t) = v` by bracketing on the node values, then Newton with a
    /// bisection safeguard inside the bracketing segment.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        let n = self.x.len();
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot invert non-finite value {v}")));
        }
        if v <= self.y[0] {
            if self.m[0] <= 0.0 {
                return Err(Error::NonMonotone("zero end slope below grid".into()));
            }
            return Ok(self.x[0] + (v - self.y[0]) / self.m[0]);
        }
        if v >= self.y[n - 1] {
            if self.m[n - 1] <= 0.0 {
                return Err(Error::NonMonotone("zero end slope above grid".into()));
            }
            return Ok(self.x[n - 1] + (v - self.y[n - 1]) / self.m[n - 1]);
        }
        let i = self.y.partition_point(|&y| y <= v).clamp(1, n - 1) - 1;
        let (mut lo, mut hi) = (self.x[i], self.x[i + 1]);
        let frac = (v - self.y[i]) / (self.y[i + 1] - self.y[i]);
        let mut t = lo + frac * (hi - lo);
        for _ in 0..100 {
            let (f, d) = self.eval_with_slope(t);
            let r = f - v;
            if r == 0.0 {
                return Ok(t);
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = if d > 0.0 { t - r / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-16 * (1.0 + t.abs()) {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }
}

/// Trigonometric interpolant of samples on the uniform grid
/// `theta_j = -pi + 2 pi j / N`, `N` even.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    kmin: i64,
    /// Coefficients for `k = kmin ..= kmin + coeffs.len() - 1`.
    coeffs: Vec<Complex>,
}

impl TrigSeries {
    /// Builds the interpolant; coefficients below `1e-14` of the largest are dropped.
    pub fn from_samples(values: &[Complex]) -> Result<Self> {
        let n = values.len();
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "trigonometric interpolation needs an even sample count >= 4, got {n}"
            )));
        }
        let half = (n / 2) as i64;
        let mut full = Vec::with_capacity(n + 1);
        // roots of unity indexed by (k j) mod N keep the phases exact at high k
        let roots: Vec<Complex> = (0..n).map(|m| Complex::cis(-2.0 * PI * m as f64 / n as f64)).collect();
        // c_k = (1/N) sum_j v_j e^{-ik theta_j} = (-1)^k (1/N) sum_j v_j w^{kj}
        for k in -half..=half {
            let mut acc = Complex::new(0.0, 0.0);
            let kk = k.rem_euclid(n as i64) as usize;
            for (j, v) in values.iter().enumerate() {
                acc += v * roots[(kk * j) % n];
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let mut c = sign * acc / n as f64;
            if k.abs() == half {
                // split the Nyquist mode symmetrically
                c *= 0.5;
            }
            full.push(c);
        }
        let scale = full.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = 1e-14 * scale;
        for c in full.iter_mut() {
            if c.norm() <= cut {
                *c = Complex::new(0.0, 0.0);
            }
        }
        let first = full.iter().position(|c| c.norm() > 0.0);
        let last = full.iter().rposition(|c| c.norm() > 0.0);
        match (first, last) {
            (Some(a), Some(b)) => Ok(Self {
                kmin: a as i64 - half,
                coeffs: full[a..=b].to_vec(),
            }),
            _ => Ok(Self { kmin: 0, coeffs: Vec::new() }),
        }
    }

    pub fn from_real_samples(values: &[f64]) -> Result<Self> {
        let v: Vec<Complex> = values.iter().map(|&x| Complex::new(x, 0.0)).collect();
        Self::from_samples(&v)
    }

    /// Number of retained Fourier modes.
    pub fn mode_span(&self) -> usize {
        self.coeffs.len()
    }

    /// Value and derivative in `theta`.
    pub fn eval_with_derivative(&self, theta: f64) -> (Complex, Complex) {
        if self.coeffs.is_empty() {
            return (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        }
        let step = Complex::cis(theta);
        let mut p = Complex::cis(self.kmin as f64 * theta);
        let mut v = Complex::new(0.0, 0.0);
        let mut d = Complex::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.re != 0.0 || c.im != 0.0 {
                let k = (self.kmin + i as i64) as f64;
                let term = c * p;
                v += term;
                d += Complex::new(0.0, k) * term;
            }
            p *= step;
        }
        (v, d)
    }

    pub fn eval(&self, theta: f64) -> Complex {
        self.eval_with_derivative(theta).0
    }
}

/// Uniform angle grid `-pi + 2 pi j / n`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_affine_data() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t - 1.0).collect();
        let c = MonotoneCubic::new(x, y, None).unwrap();
        for t in [-3.0, 0.1, 1.37, 4.4, 9.0] {
            let (v, d) = c.eval_with_slope(t);
            assert!((v - (2.0 * t - 1.0)).abs() < 1e-13);
            assert!((d - 2.0).abs() < 1e-13);
            assert!((c.inverse(v).unwrap() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_rejects_non_monotone() {
        let r = MonotoneCubic::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.5], None);
        assert!(matches!(r, Err(Error::NonMonotone(_))));
    }

    #[test]
    fn cubic_with_exact_slopes_is_fourth_order() {
        let f = |t: f64| t + 0.5 * (1.0 + 0.08 * (2.0 * t).exp()).ln();
        let df = |t: f64| 1.0 + 0.08 * (2.0 * t).exp() / (1.0 + 0.08 * (2.0 * t).exp());
        let x: Vec<f64> = (0..41).map(|i| -4.0 + 0.1 * i as f64).collect();
        let y = x.iter().map(|&t| f(t)).collect();
        let m = x.iter().map(|&t| df(t)).collect();
        let c = MonotoneCubic::new(x, y, Some(m)).unwrap();
        let err = (0..400)
            .map(|i| -4.0 + 0.01 * i as f64 + 0.003)
            .map(|t| (c.eval(t) - f(t)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn trig_series_interpolates_and_differentiates() {
        let th = theta_grid(64);
        let f = |t: f64| Complex::cis(2.0 * t) * (1.0 + 0.1 * t.cos());
        let samples: Vec<Complex> = th.iter().map(|&t| f(t)).collect();
        let s = TrigSeries::from_samples(&samples).unwrap();
        for t in [0.0, 0.3, -2.9, 3.1] {
            let (v, d) = s.eval_with_derivative(t);
            assert!((v - f(t)).norm() < 1e-13);
            let h = 1e-6;
            let fd = (f(t + h) - f(t - h)) / (2.0 * h);
            assert!((d - fd).norm() < 1e-8);
        }
        assert!(s.mode_span() <= 3);
    }
}
