//! Rescalings `f_r(z) = f(rz)/rho_f(r)`, the generalized derivative `g` on the
//! unit circle, and the asymptotic representative `D(z) = rho_f(|z|) g(z/|z|)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Hypothesis, Result};
use crate::interp::{theta_grid, TrigSeries};
use crate::maps::PlanarMap;
use crate::par;
use crate::radial::RadialProfile;
use crate::Complex;

pub const CIRCLE_COUNT: usize = 512;
pub const SIMPLICITY_TOL: f64 = 1e-4;

/// `f(rz) / rho_f(r)` with `rho_f` read from the profile.
pub fn rescale(map: &PlanarMap, profile: &RadialProfile, r: f64, z: Complex) -> Result<Complex> {
    let rho = profile.rho(r);
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("mean radius vanishes at r = {r:e}")));
    }
    Ok(map.eval(z * r)? / rho)
}

/// `r_k = 2^{-k} R / 4`, `k = 0..count`.
pub fn scale_ladder(domain_radius: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| 0.25 * domain_radius * 0.5f64.powi(k as i32)).collect()
}

pub fn default_scales(domain_radius: f64) -> Vec<f64> {
    scale_ladder(domain_radius, 12)
}

/// A degree-`d` map of the unit circle sampled on the uniform angle grid.
#[derive(Debug, Clone)]
pub struct CircleMap {
    pub theta: Vec<f64>,
    pub values: Vec<Complex>,
    pub degree: u32,
    series: TrigSeries,
}

impl CircleMap {
    pub fn from_samples(values: Vec<Complex>, degree: u32) -> Result<Self> {
        let theta = theta_grid(values.len());
        if let Some(v) = values.iter().find(|v| !(v.norm() > 0.0) || !v.norm().is_finite()) {
            return Err(Error::VanishingValue { z: *v });
        }
        let winding = winding(&values);
        if winding != degree as i64 {
            return Err(Error::IndexMismatch { computed: winding, declared: degree });
        }
        let series = TrigSeries::from_samples(&values)?;
        Ok(Self { theta, values, degree, series })
    }

    /// `e^{i(n theta + phase)}` sampled on `count` angles.
    pub fn monomial(n: u32, phase: f64, count: usize) -> Result<Self> {
        let values = theta_grid(count).into_iter().map(|t| Complex::cis(n as f64 * t + phase)).collect();
        Self::from_samples(values, n)
    }

    /// `g(e^{i theta})` by trigonometric interpolation.
    pub fn eval(&self, theta: f64) -> Complex {
        self.series.eval(theta)
    }

    pub fn eval_with_derivative(&self, theta: f64) -> (Complex, Complex) {
        self.series.eval_with_derivative(theta)
    }

    /// Argument continued from the sample at `theta = 0`.
    pub fn unwrapped_arg(&self) -> Vec<f64> {
        let n = self.values.len();
        let anchor = n / 2;
        let mut out = vec![0.0; n];
        out[anchor] = self.values[anchor].arg();
        for j in anchor + 1..n {
            out[j] = out[j - 1] + (self.values[j] / self.values[j - 1]).arg();
        }
        for j in (0..anchor).rev() {
            out[j] = out[j + 1] - (self.values[j + 1] / self.values[j]).arg();
        }
        out
    }

    /// CSV with columns `theta,re_g,im_g,unwrapped_arg`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,re_g,im_g,unwrapped_arg\n");
        for ((t, v), a) in self.theta.iter().zip(&self.values).zip(self.unwrapped_arg()) {
            let _ = writeln!(out, "{t:.17e},{:.17e},{:.17e},{a:.17e}", v.re, v.im);
        }
        out
    }
}

fn winding(values: &[Complex]) -> i64 {
    let n = values.len();
    let total: f64 = (0..n).map(|j| (values[(j + 1) % n] / values[j]).arg()).sum();
    (total / (2.0 * PI)).round() as i64
}

fn sample_rescaling(map: &PlanarMap, profile: &RadialProfile, r: f64, count: usize) -> Result<Vec<Complex>> {
    let theta = theta_grid(count);
    par::map(&theta, |&t| rescale(map, profile, r, Complex::cis(t))).into_iter().collect()
}

fn sup_distance(a: &[Complex], b: &[Complex]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// The circle map at the finest scale and the sup-distances between
/// consecutive rescalings.
#[derive(Debug, Clone)]
pub struct GeneralizedDerivative {
    pub circle: CircleMap,
    pub distances: Vec<f64>,
}

fn rescalings(map: &PlanarMap, profile: &RadialProfile, r_seq: &[f64], count: usize) -> Result<Vec<Vec<Complex>>> {
    if r_seq.len() < 3 {
        return Err(Error::InsufficientSamples("need at least three scales".into()));
    }
    if r_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("scales must decrease".into()));
    }
    r_seq.iter().map(|&r| sample_rescaling(map, profile, r, count)).collect()
}

fn consecutive_distances(samples: &[Vec<Complex>]) -> Vec<f64> {
    samples.windows(2).map(|w| sup_distance(&w[0], &w[1])).collect()
}

fn tail_decreasing(distances: &[f64]) -> bool {
    let tail = &distances[distances.len().saturating_sub(4)..];
    tail.windows(2).all(|w| w[1] <= 1.5 * w[0] + 1e-12)
}

/// Evaluates the rescalings along `r_seq` and keeps the finest as `g`.
pub fn generalized_derivative(
    map: &PlanarMap,
    profile: &RadialProfile,
    r_seq: &[f64],
    circle_count: usize,
) -> Result<GeneralizedDerivative> {
    let samples = rescalings(map, profile, r_seq, circle_count)?;
    let distances = consecutive_distances(&samples);
    let last = distances[distances.len() - 1];
    if last > SIMPLICITY_TOL && !tail_decreasing(&distances) {
        return Err(Error::HypothesisFailed {
            which: Hypothesis::Simplicity,
            detail: format!("rescalings do not settle (last sup-distance {last:e})"),
        });
    }
    let circle = CircleMap::from_samples(samples.into_iter().last().unwrap_or_default(), profile.degree)?;
    Ok(GeneralizedDerivative { circle, distances })
}

#[derive(Debug, Clone, Copy)]
pub struct Simplicity {
    pub simple: bool,
    pub defect: f64,
}

/// Largest sup-distance among the three finest rescalings; simple when it is
/// below `1e-4` and the consecutive distances are not growing.
pub fn simplicity_check(map: &PlanarMap, profile: &RadialProfile, r_seq: &[f64]) -> Result<Simplicity> {
    let samples = rescalings(map, profile, r_seq, CIRCLE_COUNT)?;
    let distances = consecutive_distances(&samples);
    let k = samples.len();
    let finest = &samples[k - 3..];
    let defect = sup_distance(&finest[0], &finest[1])
        .max(sup_distance(&finest[0], &finest[2]))
        .max(sup_distance(&finest[1], &finest[2]));
    Ok(Simplicity { simple: defect < SIMPLICITY_TOL && tail_decreasing(&distances), defect })
}

/// `D(z) = rho_f(|z|) g(z/|z|)`.
#[derive(Debug, Clone)]
pub struct AsymptoticRep {
    pub circle: CircleMap,
    pub profile: RadialProfile,
}

impl AsymptoticRep {
    pub fn new(circle: CircleMap, profile: RadialProfile) -> Result<Self> {
        if circle.degree != profile.degree {
            return Err(Error::IndexMismatch { computed: circle.degree as i64, declared: profile.degree });
        }
        Ok(Self { circle, profile })
    }

    /// The representative of `C z^n |z|^m`, which is the map itself.
    pub fn radial_power(c: Complex, n: u32, m: f64, t_min: f64, t_max: f64) -> Result<Self> {
        let profile = RadialProfile::affine(n as f64 + m, c.norm().ln(), t_min, t_max, n)?;
        let circle = CircleMap::monomial(n, c.arg(), CIRCLE_COUNT)?;
        Self::new(circle, profile)
    }

    pub fn degree(&self) -> u32 {
        self.profile.degree
    }

    pub fn eval(&self, z: Complex) -> Complex {
        let r = z.norm();
        if r == 0.0 {
            return Complex::new(0.0, 0.0);
        }
        self.circle.eval(z.arg()) * self.profile.eval(r.ln()).exp()
    }
}

/// Checks simplicity and packages `D` from the generalized derivative.
pub fn asymptotic_rep(map: &PlanarMap, profile: &RadialProfile, r_seq: &[f64]) -> Result<AsymptoticRep> {
    let s = simplicity_check(map, profile, r_seq)?;
    if !s.simple {
        return Err(Error::HypothesisFailed {
            which: Hypothesis::Simplicity,
            detail: format!("rescalings disagree by {:e}", s.defect),
        });
    }
    let g = generalized_derivative(map, profile, r_seq, CIRCLE_COUNT)?;
    AsymptoticRep::new(g.circle, profile.clone())
}
