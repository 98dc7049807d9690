//! Logarithmic lifts: `f̃` with `exp∘f̃ = f∘exp` on `Re z < log R`, the
//! separable lift `D̃(x+iy) = g1(y) + rho~(x) + i g2(y)` of the representative,
//! their derivatives and inverses, and the BIP energy of horizontal lines.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::infinitesimal::AsymptoticRep;
use crate::interp::{theta_grid, TrigSeries};
use crate::maps::{MapKind, PlanarMap};
use crate::quad::simpson;
use crate::radial::{resolve_degree, RadialProfile};
use crate::Complex;

const TWO_PI: f64 = 2.0 * PI;
const CONTINUATION_STEP: f64 = 0.1;
const MAX_INCREMENT: f64 = PI / 4.0;
const MAX_HALVINGS: u32 = 30;

/// Closed-form lifts, correct up to an additive `2 pi i k`.
#[derive(Debug, Clone)]
enum FastPath {
    Radial { log_c: Complex, n: f64, m: f64 },
    Holomorphic { log_lead: Complex, d: f64, ratios: Vec<(f64, Complex)> },
    Perturbed { base: Box<FastPath>, eps: f64, series: Vec<Complex> },
    Compose(Vec<(FastPath, f64)>),
}

impl FastPath {
    fn build(map: &PlanarMap) -> Option<Self> {
        let r = map.domain_radius;
        match &map.kind {
            MapKind::RadialPower { c, n, m } => Some(FastPath::Radial { log_c: c.ln(), n: *n as f64, m: *m }),
            MapKind::HolomorphicSeries { coeffs } => {
                let d = coeffs.iter().position(|a| a.norm() > 0.0)?;
                let lead = coeffs[d];
                let ratios: Vec<(f64, Complex)> = coeffs
                    .iter()
                    .enumerate()
                    .skip(d + 1)
                    .filter(|(_, a)| a.norm() > 0.0)
                    .map(|(k, a)| ((k - d) as f64, a / lead))
                    .collect();
                // Log(1 + S) is continuous on the half-plane only if |S| < 1 there
                let bound: f64 = ratios.iter().map(|(k, q)| q.norm() * r.powf(*k)).sum();
                (bound < 1.0).then(|| FastPath::Holomorphic {
                    log_lead: lead.ln(),
                    d: (d + 1) as f64,
                    ratios,
                })
            }
            MapKind::PerturbedRadial { c, n, m, eps, series } => {
                let bound: f64 =
                    eps.abs() * series.iter().enumerate().map(|(k, b)| b.norm() * r.powi(k as i32 + 1)).sum::<f64>();
                (bound < 1.0).then(|| FastPath::Perturbed {
                    base: Box::new(FastPath::Radial { log_c: c.ln(), n: *n as f64, m: *m }),
                    eps: *eps,
                    series: series.clone(),
                })
            }
            MapKind::Composition(maps) => maps
                .iter()
                .map(|m| FastPath::build(m).map(|p| (p, m.domain_radius.ln())))
                .collect::<Option<Vec<_>>>()
                .map(FastPath::Compose),
            MapKind::Custom(_) => None,
        }
    }

    fn eval(&self, z: Complex) -> Result<Complex> {
        Ok(match self {
            FastPath::Radial { log_c, n, m } => Complex::new((n + m) * z.re, n * z.im) + log_c,
            FastPath::Holomorphic { log_lead, d, ratios } => {
                let s: Complex = ratios.iter().map(|(k, q)| q * (z * k).exp()).sum();
                log_lead + z * d + (1.0 + s).ln()
            }
            FastPath::Perturbed { base, eps, series } => {
                let ez = z.exp();
                let mut p = Complex::new(0.0, 0.0);
                for b in series.iter().rev() {
                    p = p * ez + b;
                }
                base.eval(z)? + (1.0 + *eps * p * ez).ln()
            }
            FastPath::Compose(parts) => {
                let mut w = z;
                for (part, log_r) in parts.iter().rev() {
                    if !(w.re < *log_r) {
                        return Err(Error::DomainEscape { z: w, log_r: *log_r });
                    }
                    w = part.eval(w)?;
                }
                w
            }
        })
    }
}

/// Branch-tracked lift `f̃` of a map on the half-plane `Re z < log R`.
#[derive(Debug, Clone)]
pub struct HalfPlaneLift {
    pub map: PlanarMap,
    pub degree: u32,
    pub log_r: f64,
    /// Real anchor `t0 = log R - 1`.
    pub anchor: f64,
    /// `Im f̃(t0) = arg f(e^{t0})` in `(-pi, pi]`.
    pub base_branch: f64,
    fast: Option<(FastPath, Complex)>,
}

impl HalfPlaneLift {
    pub fn new(map: &PlanarMap) -> Result<Self> {
        let degree = resolve_degree(map)?;
        let log_r = map.domain_radius.ln();
        let anchor = log_r - 1.0;
        let w0 = map.eval(Complex::new(anchor.exp(), 0.0))?;
        if w0.norm() == 0.0 {
            return Err(Error::VanishingValue { z: Complex::new(anchor.exp(), 0.0) });
        }
        let base_branch = w0.arg();
        let fast = match FastPath::build(map) {
            Some(path) => {
                let v = path.eval(Complex::new(anchor, 0.0))?;
                let k = ((base_branch - v.im) / TWO_PI).round();
                Some((path, Complex::new(0.0, TWO_PI * k)))
            }
            None => None,
        };
        Ok(Self { map: map.clone(), degree, log_r, anchor, base_branch, fast })
    }

    /// True when a closed-form lift is used instead of continuation.
    pub fn has_closed_form(&self) -> bool {
        self.fast.is_some()
    }

    fn check(&self, z: Complex) -> Result<()> {
        if !(z.re < self.log_r) || !z.im.is_finite() {
            return Err(Error::DomainEscape { z, log_r: self.log_r });
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex) -> Result<Complex> {
        self.check(z)?;
        match &self.fast {
            Some((path, shift)) => Ok(path.eval(z)? + shift),
            None => {
                // continuation from the anchor strip, shifted by the lift's periodicity
                let k = (z.im / TWO_PI).round();
                let base = self.continuation(Complex::new(z.re, z.im - TWO_PI * k))?;
                Ok(base + Complex::new(0.0, TWO_PI * self.degree as f64 * k))
            }
        }
    }

    fn point(&self, z: Complex) -> Result<Complex> {
        let w = self.map.eval(z.exp())?;
        if w.norm() == 0.0 {
            return Err(Error::VanishingValue { z: z.exp() });
        }
        Ok(w)
    }

    /// Continuation from the anchor along the real axis to `Re z`, then
    /// vertically to `Im z`, with argument increments kept below `pi/4`.
    pub fn continuation(&self, z: Complex) -> Result<Complex> {
        self.check(z)?;
        let start = Complex::new(self.anchor, 0.0);
        let mut arg = self.base_branch;
        let mut prev = self.point(start)?;
        let mut here = start;
        for target in [Complex::new(z.re, 0.0), z] {
            let span = (target - here).norm();
            let steps = ((span / CONTINUATION_STEP).ceil() as usize).max(1);
            let from = here;
            for s in 1..=steps {
                let next = from + (target - from) * (s as f64 / steps as f64);
                let (delta, w) = self.track(here, next, prev, 0)?;
                arg += delta;
                prev = w;
                here = next;
            }
        }
        Ok(Complex::new(prev.norm().ln(), arg))
    }

    fn track(&self, a: Complex, b: Complex, wa: Complex, depth: u32) -> Result<(f64, Complex)> {
        let wb = self.point(b)?;
        let delta = (wb / wa).arg();
        if delta.abs() <= MAX_INCREMENT {
            return Ok((delta, wb));
        }
        if depth >= MAX_HALVINGS {
            return Err(Error::BranchTracking { z: b });
        }
        let mid = 0.5 * (a + b);
        let (d1, wm) = self.track(a, mid, wa, depth + 1)?;
        let (d2, wb) = self.track(mid, b, wm, depth + 1)?;
        Ok((d1 + d2, wb))
    }

    /// `(f̃_z, f̃_zbar)` at `z`.
    pub fn wirtinger(&self, z: Complex) -> Result<(Complex, Complex)> {
        self.check(z)?;
        if let MapKind::RadialPower { n, m, .. } = &self.map.kind {
            let n = *n as f64;
            return Ok((Complex::new(n + 0.5 * m, 0.0), Complex::new(0.5 * m, 0.0)));
        }
        let ez = z.exp();
        let w = self.point(z)?;
        let (fz, fzb) = self.map.wirtinger(ez)?;
        Ok((fz * ez / w, fzb * ez.conj() / w))
    }

    /// Solves `f̃(z) = w` by damped Newton from `guess`.
    pub fn inverse(&self, w: Complex, guess: Complex) -> Result<Complex> {
        let tol = 1e-12 * w.norm().max(1.0);
        let mut z = guess;
        if !(z.re < self.log_r) {
            z.re = self.log_r - 1e-3;
        }
        let mut res = self.eval(z)? - w;
        for _ in 0..100 {
            if res.norm() <= tol {
                return Ok(z);
            }
            let (a, b) = self.wirtinger(z)?;
            let jac = a.norm_sqr() - b.norm_sqr();
            if !(jac > 0.0) {
                return Err(Error::VanishingJacobian { jacobian: jac });
            }
            let step = -(a.conj() * res - b * res.conj()) / jac;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..=20 {
                let cand = z + step * t;
                if cand.re < self.log_r {
                    if let Ok(v) = self.eval(cand) {
                        let r = v - w;
                        if r.norm() < res.norm() {
                            z = cand;
                            res = r;
                            accepted = true;
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                if res.norm() <= 10.0 * tol {
                    return Ok(z);
                }
                let full = z + step;
                if !(full.re < self.log_r) {
                    return Err(Error::DomainEscape { z: full, log_r: self.log_r });
                }
                return Err(Error::NonConvergence {
                    operation: "lift_inverse",
                    detail: format!("Newton stagnated at {z} with residual {:e}", res.norm()),
                });
            }
        }
        Err(Error::NonConvergence { operation: "lift_inverse", detail: format!("no convergence for w = {w}") })
    }

    /// `int_{-pi}^{pi} |gamma_t'(s)|^2 ds` for `gamma_t(s) = f̃(t + is)`.
    pub fn bip_integral(&self, t: f64) -> Result<f64> {
        let energy = |intervals: usize| -> Result<f64> {
            let mut err = None;
            let v = simpson(-PI, PI, intervals, |s| match self.wirtinger(Complex::new(t, s)) {
                Ok((a, b)) => (a - b).norm_sqr(),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(v),
            }
        };
        let mut n = 256;
        let mut prev = energy(n)?;
        loop {
            n *= 2;
            let next = energy(n)?;
            if (next - prev).abs() <= 1e-10 * next.abs() {
                return Ok(next);
            }
            if n >= 16384 {
                return Err(Error::NonConvergence {
                    operation: "bip_integral",
                    detail: format!("line t = {t}: refinements differ by {:e}", (next - prev).abs()),
                });
            }
            prev = next;
        }
    }
}

/// `D̃(x+iy) = g1(y) + rho~(x) + i g2(y)`, with `g2(y) = d y + p(y)` and
/// `g1`, `p` stored as trigonometric interpolants.
#[derive(Debug, Clone)]
pub struct SeparableLift {
    pub profile: RadialProfile,
    pub degree: u32,
    pub theta: Vec<f64>,
    pub g1_table: Vec<f64>,
    pub g2_table: Vec<f64>,
    g1: TrigSeries,
    p: TrigSeries,
    shift: f64,
}

impl SeparableLift {
    /// Builds from tables of `g1` and `g2` on the uniform angle grid.
    pub fn from_tables(profile: RadialProfile, g1_table: Vec<f64>, g2_table: Vec<f64>) -> Result<Self> {
        let n = g1_table.len();
        if g2_table.len() != n {
            return Err(Error::InvalidParameter("g1 and g2 tables differ in length".into()));
        }
        let degree = profile.degree;
        let theta = theta_grid(n);
        if let Some(j) = (0..n - 1).find(|&j| g2_table[j + 1] <= g2_table[j]) {
            return Err(Error::NonMonotone(format!("g2 decreases between angles {} and {}", theta[j], theta[j + 1])));
        }
        let p_table: Vec<f64> = theta.iter().zip(&g2_table).map(|(t, g)| g - degree as f64 * t).collect();
        let g1 = TrigSeries::from_real_samples(&g1_table)?;
        let p = TrigSeries::from_real_samples(&p_table)?;
        Ok(Self { profile, degree, theta, g1_table, g2_table, g1, p, shift: 0.0 })
    }

    /// `D̃(z) = rho~(x) + i(d y + phase)`: the lift of `C z^d |z|^m` style
    /// representatives, up to the profile.
    pub fn monomial(profile: RadialProfile, phase: f64, count: usize) -> Result<Self> {
        let d = profile.degree as f64;
        let theta = theta_grid(count);
        let g2 = theta.iter().map(|t| d * t + phase).collect();
        Self::from_tables(profile, vec![0.0; count], g2)
    }

    pub fn g1(&self, y: f64) -> f64 {
        self.g1.eval(y).re
    }

    pub fn g2(&self, y: f64) -> f64 {
        self.degree as f64 * y + self.p.eval(y).re + self.shift
    }

    fn g_with_derivatives(&self, y: f64) -> (f64, f64, f64, f64) {
        let (g1, dg1) = self.g1.eval_with_derivative(y);
        let (p, dp) = self.p.eval_with_derivative(y);
        let d = self.degree as f64;
        (g1.re, dg1.re, d * y + p.re + self.shift, d + dp.re)
    }

    pub fn eval(&self, z: Complex) -> Complex {
        let (g1, _, g2, _) = self.g_with_derivatives(z.im);
        Complex::new(g1 + self.profile.eval(z.re), g2)
    }

    /// `(D̃_z, D̃_zbar) = (rho~' - i g1' + g2', rho~' + i g1' - g2') / 2`.
    pub fn wirtinger(&self, z: Complex) -> (Complex, Complex) {
        let (_, dg1, _, dg2) = self.g_with_derivatives(z.im);
        let (_, dr) = self.profile.eval_with_slope(z.re);
        (0.5 * Complex::new(dr + dg2, -dg1), 0.5 * Complex::new(dr - dg2, dg1))
    }

    /// Shifts `g2` by `2 pi k` so that `D̃` agrees with `f̃` in branch at
    /// the real point `t`.
    pub fn align_to(&mut self, lift: &HalfPlaneLift, t: f64) -> Result<i64> {
        let f = lift.eval(Complex::new(t, 0.0))?;
        let dv = self.eval(Complex::new(t, 0.0));
        let k = ((f.im - dv.im) / TWO_PI).round();
        self.shift += TWO_PI * k;
        Ok(k as i64)
    }

    /// Solves `D̃(z) = w`: `g2(y) = Im w` by bisection with Newton polish on
    /// the reduced period, then `x = rho~^{-1}(Re w - g1(y))`.
    pub fn inverse(&self, w: Complex) -> Result<Complex> {
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot invert non-finite value {w}")));
        }
        let d = self.degree as f64;
        let lo_val = self.g2(-PI);
        let period = TWO_PI * d;
        let j = ((w.im - lo_val) / period).floor();
        let v = w.im - j * period;
        let (mut a, mut b) = (-PI, PI);
        let mut y = -PI + (v - lo_val) / d;
        y = y.clamp(a, b);
        for _ in 0..200 {
            let (_, _, g, dg) = self.g_with_derivatives(y);
            let r = g - v;
            if r > 0.0 {
                b = y;
            } else {
                a = y;
            }
            if r.abs() <= 1e-15 * (1.0 + v.abs()) {
                break;
            }
            let mut next = if dg > 0.0 { y - r / dg } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - y).abs() <= 1e-16 {
                y = next;
                break;
            }
            y = next;
        }
        let y_full = y + TWO_PI * j;
        let x = self.profile.inverse(w.re - self.g1(y))?;
        let z = Complex::new(x, y_full);
        let res = (self.eval(z) - w).norm();
        if res > 1e-10 * w.norm().max(1.0) {
            return Err(Error::NonConvergence {
                operation: "dtilde_inverse",
                detail: format!("residual {res:e} at w = {w}"),
            });
        }
        Ok(z)
    }
}

/// Continuous lift of `log g(e^{i theta})` from the anchor `theta = 0`.
pub fn build_separable(rep: &AsymptoticRep) -> Result<SeparableLift> {
    let g = &rep.circle;
    if let Some(v) = g.values.iter().find(|v| !(v.norm() > 0.0)) {
        return Err(Error::VanishingValue { z: *v });
    }
    let g1: Vec<f64> = g.values.iter().map(|v| v.norm().ln()).collect();
    let g2 = g.unwrapped_arg();
    SeparableLift::from_tables(rep.profile.clone(), g1, g2)
}
