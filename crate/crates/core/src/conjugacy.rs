//! The linearization iteration `ψ̃_k = D̃^{-k} ∘ f̃^k` (attracting) or
//! `ψ̃_k = D̃^k ∘ f̃^{-k}` (repelling), its descent `ψ = exp ∘ ψ̃ ∘ log`, and
//! the checks run on the result.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimates::{log_envelope, Mode, NOISE_FLOOR};
use crate::lift::{HalfPlaneLift, SeparableLift};
use crate::par;
use crate::Complex;

const TWO_PI: f64 = 2.0 * PI;
/// Consecutive non-decreasing Cauchy gaps tolerated before giving up.
const STALL_LIMIT: usize = 5;
/// Finite-difference step for the dilatation of `ψ̃`.
const FD_STEP: f64 = 1e-5;
/// Dilatation samples below this are finite-difference noise.
const MU_FLOOR: f64 = 1e-8;

/// `ψ̃_k(z) = D̃^{-k}(f̃^k(z))`.
pub fn psi_tilde_eval(lift: &HalfPlaneLift, sep: &SeparableLift, z: Complex, k: usize) -> Result<Complex> {
    let mut w = z;
    for _ in 0..k {
        w = lift.eval(w)?;
    }
    for _ in 0..k {
        w = sep.inverse(w)?;
    }
    Ok(w)
}

/// `f̃^{-1}(w)`, seeded by `D̃^{-1}(w)`.
pub fn lift_inverse(lift: &HalfPlaneLift, sep: &SeparableLift, w: Complex) -> Result<Complex> {
    let guess = sep.inverse(w).unwrap_or(w);
    if !(guess.re < lift.log_r) {
        return Err(Error::DomainEscape { z: guess, log_r: lift.log_r });
    }
    lift.inverse(w, guess)
}

/// A lift pair together with the direction of iteration and the depth `k`.
#[derive(Debug, Clone)]
pub struct Conjugacy {
    pub lift: HalfPlaneLift,
    pub sep: SeparableLift,
    pub mode: Mode,
    pub k: usize,
}

impl Conjugacy {
    pub fn new(lift: HalfPlaneLift, sep: SeparableLift, mode: Mode) -> Self {
        Self { lift, sep, mode, k: 0 }
    }

    /// `f̃` when attracting, `f̃^{-1}` when repelling.
    pub fn forward(&self, w: Complex) -> Result<Complex> {
        match self.mode {
            Mode::Attracting => self.lift.eval(w),
            Mode::Repelling => lift_inverse(&self.lift, &self.sep, w),
        }
    }

    /// `D̃^{-1}` when attracting, `D̃` when repelling.
    pub fn back(&self, w: Complex) -> Result<Complex> {
        match self.mode {
            Mode::Attracting => self.sep.inverse(w),
            Mode::Repelling => Ok(self.sep.eval(w)),
        }
    }

    fn back_n(&self, mut w: Complex, k: usize) -> Result<Complex> {
        for _ in 0..k {
            w = self.back(w)?;
        }
        Ok(w)
    }

    pub fn psi_tilde_k(&self, z: Complex, k: usize) -> Result<Complex> {
        let mut w = z;
        for _ in 0..k {
            w = self.forward(w)?;
        }
        self.back_n(w, k)
    }

    pub fn psi_tilde(&self, z: Complex) -> Result<Complex> {
        self.psi_tilde_k(z, self.k)
    }

    /// `exp(ψ̃(log z + 2 pi i branch))`.
    pub fn psi_on_branch(&self, z: Complex, branch: i64) -> Result<Complex> {
        let r = z.norm();
        if r == 0.0 {
            return Ok(Complex::new(0.0, 0.0));
        }
        if !(r < self.lift.log_r.exp()) {
            return Err(Error::OutOfDomain { z, radius: self.lift.log_r.exp() });
        }
        let lz = Complex::new(r.ln(), z.arg() + TWO_PI * branch as f64);
        Ok(self.psi_tilde(lz)?.exp())
    }

    /// `ψ(z) = exp(ψ̃(log z))`, with `ψ(0) = 0`.
    pub fn psi(&self, z: Complex) -> Result<Complex> {
        self.psi_on_branch(z, 0)
    }

    /// `D(w) = exp(D̃(log w))`.
    pub fn rep(&self, w: Complex) -> Complex {
        if w.norm() == 0.0 {
            return w;
        }
        self.sep.eval(w.ln()).exp()
    }
}

/// Constants entering the a priori bounds: `|Ẽ_1| < L T1 e^{alpha Re z}` and
/// `|Ẽ_k| <= L T1 e^{alpha Re z} / (1 - L lambda^alpha)`, with `lambda < 1`
/// the contraction of the forward step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundParams {
    pub l: f64,
    pub t1: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl BoundParams {
    pub fn contraction(&self) -> f64 {
        if self.t1 == 0.0 {
            return 0.0;
        }
        self.l * self.lambda.powf(self.alpha)
    }

    pub fn first_step(&self, x: f64) -> f64 {
        if self.t1 == 0.0 {
            return 0.0;
        }
        self.l * self.t1 * (self.alpha * x).exp()
    }

    pub fn uniform(&self, x: f64) -> f64 {
        let q = self.contraction();
        if q >= 1.0 {
            return f64::INFINITY;
        }
        self.first_step(x) / (1.0 - q)
    }
}

#[derive(Debug, Clone)]
pub struct ConjugacyResult {
    pub conj: Conjugacy,
    pub converged: bool,
    /// `sup |ψ̃_k(z) - z|` over the probe set, `k = 1..`.
    pub error_history: Vec<f64>,
    /// `sup |ψ̃_{k+1} - ψ̃_k|`, `k = 1..`.
    pub gap_history: Vec<f64>,
    pub cauchy_ratios: Vec<f64>,
    pub bound_check: bool,
    pub lemma_check: bool,
    pub ratio_check: bool,
    pub bounds: BoundParams,
    pub residual: Option<f64>,
    pub mu_decay: Option<(f64, f64)>,
}

/// Serializable part of a [`ConjugacyResult`].
#[derive(Debug, Clone, Serialize)]
pub struct ConjugacySummary {
    pub mode: Mode,
    pub k_used: usize,
    pub converged: bool,
    pub residual: Option<f64>,
    pub bound_check: bool,
    pub lemma_check: bool,
    pub ratio_check: bool,
    pub contraction_bound: f64,
    pub error_history: Vec<f64>,
    pub gap_history: Vec<f64>,
    pub cauchy_ratios: Vec<f64>,
    /// `(C_fit, nu_fit)` of `|mu_ψ̃| <= C e^{nu Re z}`.
    pub mu_decay: Option<(f64, f64)>,
    pub asymptotically_conformal: Option<bool>,
}

impl ConjugacyResult {
    pub fn k_used(&self) -> usize {
        self.conj.k
    }

    pub fn psi(&self, z: Complex) -> Result<Complex> {
        self.conj.psi(z)
    }

    pub fn psi_tilde(&self, z: Complex) -> Result<Complex> {
        self.conj.psi_tilde(z)
    }

    pub fn summary(&self) -> ConjugacySummary {
        ConjugacySummary {
            mode: self.conj.mode,
            k_used: self.conj.k,
            converged: self.converged,
            residual: self.residual,
            bound_check: self.bound_check,
            lemma_check: self.lemma_check,
            ratio_check: self.ratio_check,
            contraction_bound: self.bounds.contraction(),
            error_history: self.error_history.clone(),
            gap_history: self.gap_history.clone(),
            cauchy_ratios: self.cauchy_ratios.clone(),
            mu_decay: self.mu_decay,
            asymptotically_conformal: self.mu_decay.map(|m| m.1 > 0.0),
        }
    }

    /// CSV with columns `re_z,im_z,re_psi,im_psi` over the given points.
    pub fn grid_csv(&self, points: &[Complex]) -> Result<String> {
        let values = par::map(points, |&z| self.psi(z)).into_iter().collect::<Result<Vec<_>>>()?;
        let mut out = String::from("re_z,im_z,re_psi,im_psi\n");
        for (z, w) in points.iter().zip(values) {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", z.re, z.im, w.re, w.im);
        }
        Ok(out)
    }
}

/// Slack for comparing measured quantities with bounds that may be zero.
const BOUND_SLACK: f64 = 1e-10;

/// Runs the iteration over `probe` until the sup Cauchy gap drops below `tol`
/// or `k_max` is reached.
pub fn iterate(mut conj: Conjugacy, bounds: BoundParams, probe: &[Complex], tol: f64, k_max: usize) -> Result<ConjugacyResult> {
    if probe.is_empty() || k_max == 0 {
        return Err(Error::InvalidParameter("iteration needs probe points and k_max >= 1".into()));
    }
    let mut orbit: Vec<Complex> = probe.to_vec();
    let mut prev: Option<Vec<Complex>> = None;
    let mut errors = Vec::new();
    let mut gaps: Vec<f64> = Vec::new();
    let mut bound_check = true;
    let mut lemma_check = true;
    let mut stall = 0;
    let mut converged = false;
    for k in 1..=k_max {
        orbit = par::map(&orbit, |&w| conj.forward(w)).into_iter().collect::<Result<Vec<_>>>()?;
        let psi = par::map(&orbit, |&w| conj.back_n(w, k)).into_iter().collect::<Result<Vec<_>>>()?;
        let mut sup_err = 0.0f64;
        for (z, p) in probe.iter().zip(&psi) {
            let e = (p - z).norm();
            sup_err = sup_err.max(e);
            if e > bounds.uniform(z.re) + BOUND_SLACK {
                bound_check = false;
            }
            if k == 1 && e > bounds.first_step(z.re) + BOUND_SLACK {
                lemma_check = false;
            }
        }
        errors.push(sup_err);
        conj.k = k;
        if let Some(before) = &prev {
            let gap = psi.iter().zip(before).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if let Some(&last) = gaps.last() {
                stall = if gap >= 0.99 * last { stall + 1 } else { 0 };
            }
            gaps.push(gap);
            if gap < tol {
                converged = true;
                break;
            }
            if stall >= STALL_LIMIT {
                return Err(Error::Divergence(format!(
                    "Cauchy gaps did not decrease for {STALL_LIMIT} consecutive steps (last {gap:e} at k = {k})"
                )));
            }
        }
        prev = Some(psi);
    }
    let ratios: Vec<f64> = gaps
        .windows(2)
        .filter(|w| w[0] > 1e3 * NOISE_FLOOR && w[1] > 1e3 * NOISE_FLOOR)
        .map(|w| w[1] / w[0])
        .collect();
    // measured from k >= 3 on
    let ratio_check = bounds.t1 == 0.0 || ratios.iter().skip(1).all(|&q| q <= bounds.contraction() + 0.1);
    Ok(ConjugacyResult {
        conj,
        converged,
        error_history: errors,
        gap_history: gaps,
        cauchy_ratios: ratios,
        bound_check,
        lemma_check,
        ratio_check,
        bounds,
        residual: None,
        mu_decay: None,
    })
}

pub fn iterate_attracting(
    lift: &HalfPlaneLift,
    sep: &SeparableLift,
    bounds: BoundParams,
    probe: &[Complex],
    tol: f64,
    k_max: usize,
) -> Result<ConjugacyResult> {
    iterate(Conjugacy::new(lift.clone(), sep.clone(), Mode::Attracting), bounds, probe, tol, k_max)
}

pub fn iterate_repelling(
    lift: &HalfPlaneLift,
    sep: &SeparableLift,
    bounds: BoundParams,
    probe: &[Complex],
    tol: f64,
    k_max: usize,
) -> Result<ConjugacyResult> {
    iterate(Conjugacy::new(lift.clone(), sep.clone(), Mode::Repelling), bounds, probe, tol, k_max)
}

/// Rings of radius `radius 2^{-j}`, `j < rings`, with `angles` points each.
pub fn probe_disk(radius: f64, rings: usize, angles: usize) -> Vec<Complex> {
    let mut out = Vec::with_capacity(rings * angles);
    for j in 0..rings {
        let r = radius * 0.5f64.powi(j as i32);
        for a in 0..angles {
            out.push(Complex::from_polar(r, -PI + TWO_PI * (a as f64 + 0.5) / angles as f64));
        }
    }
    out
}

/// `max |ψ(f(z)) - D(ψ(z))| / |D(ψ(z))|` over the probe points.
pub fn residual<F>(conj: &Conjugacy, f: F, probe: &[Complex]) -> Result<f64>
where
    F: Fn(Complex) -> Result<Complex> + Sync + Send,
{
    let rows = par::map(probe, |&z| -> Result<f64> {
        let lhs = conj.psi(f(z)?)?;
        let rhs = conj.rep(conj.psi(z)?);
        Ok((lhs - rhs).norm() / rhs.norm())
    });
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max))
}

/// Wirtinger derivatives of `ψ̃` by second-order central differences.
pub fn psi_tilde_wirtinger(conj: &Conjugacy, z: Complex, h: f64) -> Result<(Complex, Complex)> {
    let dx = (conj.psi_tilde(z + h)? - conj.psi_tilde(z - h)?) / (2.0 * h);
    let ih = Complex::new(0.0, h);
    let dy = (conj.psi_tilde(z + ih)? - conj.psi_tilde(z - ih)?) / (2.0 * h);
    let i = Complex::new(0.0, 1.0);
    Ok((0.5 * (dx - i * dy), 0.5 * (dx + i * dy)))
}

/// Envelope fit `|mu_ψ̃(z)| <= C e^{nu Re z}` over a `count x count` grid of
/// the window. `(0, inf)` when `|mu|` stays below the noise floor.
pub fn dilatation_decay(conj: &Conjugacy, t_lo: f64, t_hi: f64, count: usize) -> Result<(f64, f64)> {
    let count = count.max(3);
    let mut points = Vec::with_capacity(count * count);
    for i in 0..count {
        let x = t_lo + (t_hi - t_lo) * i as f64 / (count - 1) as f64;
        for j in 0..count {
            points.push(Complex::new(x, -PI + TWO_PI * (j as f64 + 0.5) / count as f64));
        }
    }
    let rows = par::map(&points, |&z| -> Result<(f64, f64)> {
        let (a, b) = psi_tilde_wirtinger(conj, z, FD_STEP)?;
        if !(a.norm() > 0.0) {
            return Err(Error::DegenerateDerivative { z, fz_abs: a.norm(), fzbar_abs: b.norm() });
        }
        Ok((z.re, b.norm() / a.norm()))
    });
    let samples = rows.into_iter().collect::<Result<Vec<_>>>()?;
    match log_envelope(&samples, MU_FLOOR) {
        None => Ok((0.0, f64::INFINITY)),
        Some((nu, _, _)) => {
            let c = samples
                .iter()
                .filter(|p| p.1 > MU_FLOOR)
                .map(|p| p.1 * (-nu * p.0).exp())
                .fold(0.0, f64::max);
            Ok((c, nu))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infinitesimal::AsymptoticRep;
    use crate::lift::build_separable;
    use crate::maps::PlanarMap;
    use crate::radial::RadialProfile;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn exact(cc: Complex, n: u32, m: f64) -> (HalfPlaneLift, SeparableLift) {
        let f = PlanarMap::radial_power(cc, n, m, 1.0).unwrap();
        let rep = AsymptoticRep::radial_power(cc, n, m, -40.0, -0.5).unwrap();
        (HalfPlaneLift::new(&f).unwrap(), build_separable(&rep).unwrap())
    }

    fn no_bounds() -> BoundParams {
        BoundParams { l: 1.0, t1: 0.0, alpha: f64::INFINITY, lambda: 0.5 }
    }

    #[test]
    fn exact_representative_gives_identity() {
        let (lift, sep) = exact(c(1.0, 0.0), 1, 1.0);
        let probe: Vec<Complex> = (0..25).map(|j| c(-8.0 + 0.25 * j as f64, -3.0 + 0.25 * j as f64)).collect();
        for k in 1..4 {
            for &z in &probe {
                assert!((psi_tilde_eval(&lift, &sep, z, k).unwrap() - z).norm() < 1e-12);
            }
        }
        let res = iterate_attracting(&lift, &sep, no_bounds(), &probe, 1e-10, 20).unwrap();
        assert!(res.converged && res.k_used() <= 2);
        assert!(res.error_history.iter().all(|&e| e < 1e-12));
        assert!(res.bound_check && res.lemma_check && res.ratio_check);
    }

    #[test]
    fn repelling_identity_for_square_root_map() {
        let (lift, sep) = exact(c(1.0, 0.0), 2, -1.5);
        let probe: Vec<Complex> = (0..16).map(|j| c(-6.0 + 0.3 * j as f64, 0.37 * j as f64 - 3.0)).collect();
        let res = iterate_repelling(&lift, &sep, no_bounds(), &probe, 1e-10, 20).unwrap();
        assert!(res.converged);
        for &z in &probe {
            assert!((res.psi_tilde(z).unwrap() - z).norm() < 1e-10);
        }
    }

    #[test]
    fn repelling_mode_on_attracting_map_escapes() {
        let f = PlanarMap::holomorphic(vec![c(0.5, 0.0)], 1.0).unwrap();
        let lift = HalfPlaneLift::new(&f).unwrap();
        let p = RadialProfile::affine(1.0, 0.5f64.ln() - 0.1, -40.0, -0.5, 1).unwrap();
        let sep = SeparableLift::monomial(p, 0.0, 64).unwrap();
        let probe = vec![c(-2.0, 0.3), c(-1.5, -1.0)];
        let err = iterate_repelling(&lift, &sep, no_bounds(), &probe, 1e-10, 20).unwrap_err();
        assert!(matches!(err, Error::DomainEscape { .. }), "{err}");
    }

    #[test]
    fn descend_examples() {
        let (lift, sep) = exact(c(1.0, 0.0), 1, 1.0);
        let mut conj = Conjugacy::new(lift, sep, Mode::Attracting);
        conj.k = 1;
        let z = c(0.03, -0.02);
        assert!((conj.psi(z).unwrap() - z).norm() < 1e-14);
        assert_eq!(conj.psi(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((conj.psi_on_branch(z, 1).unwrap() - conj.psi_on_branch(z, -2).unwrap()).norm() < 1e-12);
        assert!(conj.psi(c(1.5, 0.0)).is_err());
    }

    #[test]
    fn translated_representative_scales_psi() {
        // f = 0.5 z, D = 0.5 e^{c} z: psi~_k(z) = z - k c, no convergence
        let f = PlanarMap::holomorphic(vec![c(0.5, 0.0)], 1.0).unwrap();
        let lift = HalfPlaneLift::new(&f).unwrap();
        let p = RadialProfile::affine(1.0, 0.5f64.ln() - 0.1, -40.0, -0.5, 1).unwrap();
        let sep = SeparableLift::monomial(p, 0.0, 64).unwrap();
        let z = c(-3.0, 0.5);
        assert!((psi_tilde_eval(&lift, &sep, z, 3).unwrap() - (z + 0.3)).norm() < 1e-10);
        let err = iterate_attracting(&lift, &sep, no_bounds(), &[z], 1e-10, 20).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
    }

    #[test]
    fn bound_params() {
        let b = BoundParams { l: 1.0, t1: 0.5, alpha: 1.0, lambda: 0.5 };
        assert!((b.contraction() - 0.5).abs() < 1e-15);
        assert!((b.uniform(0.0) - 1.0).abs() < 1e-15);
        assert!((b.first_step(-1.0) - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        let vacuous = BoundParams { l: 3.0, t1: 0.5, alpha: 1.0, lambda: 0.5 };
        assert!(vacuous.uniform(0.0).is_infinite());
    }

    #[test]
    fn probe_disk_layout() {
        let p = probe_disk(0.05, 4, 16);
        assert_eq!(p.len(), 64);
        assert!(p.iter().all(|z| z.norm() <= 0.05 + 1e-15));
        assert!((p[63].norm() - 0.05 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn identity_has_no_dilatation() {
        let (lift, sep) = exact(c(0.0, 2.0), 1, 0.5);
        let mut conj = Conjugacy::new(lift, sep, Mode::Attracting);
        conj.k = 1;
        let (cfit, nu) = dilatation_decay(&conj, -9.0, -3.0, 6).unwrap();
        assert_eq!(cfit, 0.0);
        assert!(nu.is_infinite());
    }
}
