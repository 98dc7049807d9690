//! Mean radius `rho_f(r) = sqrt(|f(B(0,r))| / pi)` by Jacobian quadrature, and
//! its logarithmic transform `rho~(t) = log rho_f(e^t)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::maps::{local_index, PlanarMap};
use crate::par;
use crate::quad::GaussLegendre;
use crate::Complex;

const START_ANGLES: usize = 64;
const MAX_ANGLES: usize = 4096;
const AGREEMENT: f64 = 1e-12;
const AGREEMENT_FD: f64 = 1e-8;

/// Finite-difference Jacobians carry ~1e-10 relative noise, so refinement is
/// judged against a looser tolerance for maps without closed-form derivatives.
fn agreement_for(map: &PlanarMap) -> f64 {
    let probe = Complex::new(0.5 * map.domain_radius, 0.0);
    match map.analytic_wirtinger(probe) {
        Ok(Some(_)) => AGREEMENT,
        _ => AGREEMENT_FD,
    }
}

/// Covering degree used to normalize areas: declared index, then the family's
/// closed form, then a winding count at `1e-3 R`.
pub fn resolve_degree(map: &PlanarMap) -> Result<u32> {
    if let Some(d) = map.declared_index {
        return Ok(d);
    }
    if let Some(d) = map.natural_degree() {
        return Ok(d);
    }
    let d = local_index(map, 1e-3 * map.domain_radius)?;
    if d < 1 {
        return Err(Error::IndexMismatch { computed: d, declared: 1 });
    }
    Ok(d as u32)
}

fn jacobian_checked(map: &PlanarMap, z: Complex) -> Result<f64> {
    let (fz, fzb) = map.wirtinger(z)?;
    let a = fz.norm_sqr();
    let b = fzb.norm_sqr();
    let j = a - b;
    if j < -1e-10 * (a + b) {
        return Err(Error::NegativeJacobian { z, value: j });
    }
    Ok(j.max(0.0))
}

/// `int_a^b int_{-pi}^{pi} J(e^{u + i theta}) e^{2u} dtheta du` on `panels`
/// Gauss-Legendre panels in `u = log|z|` and the periodic trapezoid rule in angle.
fn log_annulus(map: &PlanarMap, a: f64, b: f64, gl: &GaussLegendre, panels: usize, angles: usize) -> Result<f64> {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let dtheta = 2.0 * PI / angles as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mut err = None;
        let v = gl.integrate(lo, lo + width, |u| {
            let rad = u.exp();
            let mut ring = 0.0;
            for j in 0..angles {
                let z = Complex::from_polar(rad, -PI + dtheta * j as f64);
                match jacobian_checked(map, z) {
                    Ok(v) => ring += v,
                    Err(e) => {
                        err.get_or_insert(e);
                    }
                }
            }
            ring * dtheta * rad * rad
        });
        if let Some(e) = err {
            return Err(e);
        }
        total += v;
    }
    Ok(total)
}

/// Two-level refinement: (8-point, N angles) against (16-point, 2N angles) on
/// P radial panels, doubling `N` and `P` until the levels agree.
fn refined_annulus(map: &PlanarMap, a: f64, b: f64) -> Result<f64> {
    let coarse_gl = GaussLegendre::new(8);
    let fine_gl = GaussLegendre::new(16);
    let tol = agreement_for(map);
    let mut angles = START_ANGLES;
    let mut panels = ((b - a).ceil() as usize).max(1);
    loop {
        let coarse = log_annulus(map, a, b, &coarse_gl, panels, angles)?;
        let fine = log_annulus(map, a, b, &fine_gl, panels, 2 * angles)?;
        if (fine - coarse).abs() <= tol * fine.abs().max(f64::MIN_POSITIVE) || fine == 0.0 {
            return Ok(fine);
        }
        angles *= 2;
        panels *= 2;
        if angles > MAX_ANGLES {
            return Err(Error::NonConvergence {
                operation: "image_area",
                detail: format!("annulus [{a}, {b}] in log radius: levels differ by {:e}", (fine - coarse).abs()),
            });
        }
    }
}

/// `int_{|z| < e^b} J dA`: the annulus integrals inward from `b` until they are
/// negligible against the running total.
fn disk_integral(map: &PlanarMap, b: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut upper = b;
    let mut quiet = 0;
    for _ in 0..400 {
        let v = refined_annulus(map, upper - 1.0, upper)?;
        total += v;
        upper -= 1.0;
        if v <= 1e-17 * total {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NonConvergence {
        operation: "image_area",
        detail: "Jacobian integral near the origin does not decay".into(),
    })
}

/// Image area `(1/d) int_{B(0,r)} J_f dA`.
pub fn image_area(map: &PlanarMap, r: f64) -> Result<f64> {
    let d = resolve_degree(map)?;
    image_area_with_degree(map, r, d)
}

pub fn image_area_with_degree(map: &PlanarMap, r: f64, d: u32) -> Result<f64> {
    if !(r > 0.0 && r < map.domain_radius) {
        return Err(Error::OutOfDomain { z: Complex::new(r, 0.0), radius: map.domain_radius });
    }
    Ok(disk_integral(map, r.ln())? / d as f64)
}

pub fn mean_radius(map: &PlanarMap, r: f64) -> Result<f64> {
    Ok((image_area(map, r)? / PI).sqrt())
}

/// `(sum_{n >= d} n |a_n|^2 r^{2n})^{1/2} / sqrt(d)` where `a_d` is the first
/// nonzero coefficient (`coeffs[0] = a_1`).
pub fn series_mean_radius(coeffs: &[Complex], r: f64) -> Result<f64> {
    let d = coeffs
        .iter()
        .position(|a| a.norm() > 0.0)
        .ok_or_else(|| Error::InvalidParameter("empty coefficient sequence".into()))?
        + 1;
    let s: f64 = coeffs
        .iter()
        .enumerate()
        .skip(d - 1)
        .map(|(i, a)| (i + 1) as f64 * a.norm_sqr() * r.powi(2 * (i as i32 + 1)))
        .sum();
    Ok((s / d as f64).sqrt())
}

/// Sampled `rho~` with exact slopes and a monotone cubic interpolant.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub degree: u32,
    pub l_estimate: f64,
    curve: MonotoneCubic,
}

impl RadialProfile {
    /// Profile from tabulated values; slopes are estimated when not given.
    pub fn from_samples(t: Vec<f64>, rho_tilde: Vec<f64>, slopes: Option<Vec<f64>>, degree: u32) -> Result<Self> {
        let curve = MonotoneCubic::new(t, rho_tilde, slopes)?;
        let l_estimate = lipschitz_of(&curve);
        Ok(Self { degree, l_estimate, curve })
    }

    /// The exact profile `rho~(t) = slope t + offset` on `[t_min, t_max]`.
    pub fn affine(slope: f64, offset: f64, t_min: f64, t_max: f64, degree: u32) -> Result<Self> {
        let t = vec![t_min, t_max];
        let y = t.iter().map(|x| slope * x + offset).collect();
        Self::from_samples(t, y, Some(vec![slope, slope]), degree)
    }

    pub fn t_grid(&self) -> &[f64] {
        self.curve.grid()
    }

    pub fn rho_tilde(&self) -> &[f64] {
        self.curve.values()
    }

    pub fn slopes(&self) -> &[f64] {
        self.curve.slopes()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.curve.eval(t)
    }

    pub fn eval_with_slope(&self, t: f64) -> (f64, f64) {
        self.curve.eval_with_slope(t)
    }

    pub fn inverse(&self, v: f64) -> Result<f64> {
        self.curve.inverse(v)
    }

    /// `rho_f(r)`.
    pub fn rho(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.eval(r.ln()).exp()
    }

    pub fn rho_inverse(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.inverse(s.ln())?.exp())
    }

    /// Adjacent difference quotients of the table.
    pub fn local_quotients(&self) -> Vec<f64> {
        let t = self.t_grid();
        let y = self.rho_tilde();
        let n = t.len();
        (0..n)
            .map(|i| {
                let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
                (y[b] - y[a]) / (t[b] - t[a])
            })
            .collect()
    }

    /// CSV with columns `t,rho_tilde,local_quotient`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,rho_tilde,local_quotient\n");
        for ((t, y), q) in self.t_grid().iter().zip(self.rho_tilde()).zip(self.local_quotients()) {
            let _ = writeln!(out, "{t:.17e},{y:.17e},{q:.17e}");
        }
        out
    }
}

fn lipschitz_of(curve: &MonotoneCubic) -> f64 {
    let t = curve.grid();
    let y = curve.values();
    let mut l = 1.0f64;
    for i in 0..t.len() - 1 {
        let q = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
        l = l.max(q).max(1.0 / q);
    }
    for &m in curve.slopes() {
        if m > 0.0 {
            l = l.max(m).max(1.0 / m);
        }
    }
    l
}

/// Samples `rho~` on `count` uniform nodes of `[t_min, t_max]`.
///
/// Areas are accumulated from the innermost disk outward over the annuli
/// between adjacent nodes; slopes come from the circle integral
/// `d rho~/dt = r^2 oint J dtheta / (2 d A(r))`.
pub fn radial_profile(map: &PlanarMap, t_min: f64, t_max: f64, count: usize) -> Result<RadialProfile> {
    if count < 8 {
        return Err(Error::InsufficientSamples(format!("profile needs >= 8 nodes, got {count}")));
    }
    if !(t_min < t_max) || t_max >= map.domain_radius.ln() {
        return Err(Error::InvalidParameter(format!(
            "profile window [{t_min}, {t_max}] must be increasing and below log R = {}",
            map.domain_radius.ln()
        )));
    }
    let d = resolve_degree(map)?;
    let t: Vec<f64> = (0..count).map(|i| t_min + (t_max - t_min) * i as f64 / (count - 1) as f64).collect();
    let segments: Vec<(f64, f64)> = t.windows(2).map(|w| (w[0], w[1])).collect();
    let pieces = par::map(&segments, |&(a, b)| refined_annulus(map, a, b));
    let inner = disk_integral(map, t_min)?;
    let mut area = Vec::with_capacity(count);
    area.push(inner);
    for (i, p) in pieces.into_iter().enumerate() {
        let p = p?;
        if !(p > 0.0) {
            return Err(Error::NonMonotone(format!(
                "annulus [{}, {}] carries no area",
                segments[i].0, segments[i].1
            )));
        }
        area.push(area[i] + p);
    }
    let rho_tilde: Vec<f64> = area.iter().map(|a| 0.5 * (a / (PI * d as f64)).ln()).collect();
    let rings = par::map(&t, |&x| circle_jacobian(map, x.exp()));
    let mut slopes = Vec::with_capacity(count);
    for (i, ring) in rings.into_iter().enumerate() {
        let r = t[i].exp();
        slopes.push(r * r * ring? / (2.0 * area[i]));
    }
    RadialProfile::from_samples(t, rho_tilde, Some(slopes), d)
}

/// `oint J(r e^{i theta}) dtheta` by the trapezoid rule with angle doubling.
fn circle_jacobian(map: &PlanarMap, r: f64) -> Result<f64> {
    let ring = |n: usize| -> Result<f64> {
        let dtheta = 2.0 * PI / n as f64;
        let mut s = 0.0;
        for j in 0..n {
            s += jacobian_checked(map, Complex::from_polar(r, -PI + dtheta * j as f64))?;
        }
        Ok(s * dtheta)
    };
    let tol = agreement_for(map);
    let mut n = START_ANGLES;
    let mut prev = ring(n)?;
    loop {
        n *= 2;
        let next = ring(n)?;
        if (next - prev).abs() <= tol * next.abs() || next == 0.0 {
            return Ok(next);
        }
        if n >= MAX_ANGLES {
            return Err(Error::NonConvergence {
                operation: "radial_profile",
                detail: format!("circle integral of J at r = {r:e}"),
            });
        }
        prev = next;
    }
}
