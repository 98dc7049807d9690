//! Fitted hypothesis constants: exponential closeness of `f̃` and `D̃` and of
//! their derivatives, Hölder continuity of `D̃`'s derivatives, the dilatation
//! and bi-Lipschitz constants of `D̃`, and the multiplier threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Hypothesis, Result};
use crate::lift::{HalfPlaneLift, SeparableLift};
use crate::par;
use crate::Complex;

/// Deviations below this are rounding noise and excluded from fits.
pub const NOISE_FLOOR: f64 = 1e-12;
const SAFETY: f64 = 1.1;
const BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Attracting,
    Repelling,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Attracting => "attracting",
            Mode::Repelling => "repelling",
        }
    }
}

/// `deviation <= constant * e^{exponent * x}` over the sample set.
/// `constant = 0`, `exponent = +inf` is the sentinel for "no deviation".
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpFit {
    pub constant: f64,
    pub exponent: f64,
    pub samples: usize,
    pub noise_excluded: usize,
    pub certified: bool,
}

impl ExpFit {
    pub fn sentinel(samples: usize) -> Self {
        Self { constant: 0.0, exponent: f64::INFINITY, samples, noise_excluded: samples, certified: true }
    }

    pub fn is_sentinel(&self) -> bool {
        self.constant == 0.0
    }

    pub fn bound(&self, x: f64) -> f64 {
        if self.is_sentinel() {
            return 0.0;
        }
        self.constant * (self.exponent * x).exp()
    }
}

/// `difference <= constant * distance^exponent`; `constant = 0`, `exponent = 1`
/// when the derivatives are constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HolderFit {
    pub constant: f64,
    pub exponent: f64,
    pub samples: usize,
    pub noise_excluded: usize,
    pub certified: bool,
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Top decile of `log y` within each of ten equal-width bins of `x`.
fn upper_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / BINS as f64;
    let mut bins: Vec<Vec<(f64, f64)>> = vec![Vec::new(); BINS];
    for &p in points {
        let b = if width > 0.0 { (((p.0 - lo) / width) as usize).min(BINS - 1) } else { 0 };
        bins[b].push(p);
    }
    let mut out = Vec::new();
    for mut bin in bins.into_iter().filter(|b| !b.is_empty()) {
        bin.sort_by(|a, b| b.1.total_cmp(&a.1));
        let keep = bin.len().div_ceil(10);
        out.extend_from_slice(&bin[..keep]);
    }
    out
}

/// Least-squares line through the upper envelope of `(x, ln y)` for samples
/// with `y > floor`: `(slope, intercept, span of x)`, or `None` when fewer
/// than three samples clear the floor.
pub fn log_envelope(samples: &[(f64, f64)], floor: f64) -> Option<(f64, f64, f64)> {
    let kept: Vec<(f64, f64)> = samples.iter().filter(|p| p.1 > floor).map(|p| (p.0, p.1.ln())).collect();
    if kept.len() < 3 {
        return None;
    }
    let span = kept.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - kept.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let (slope, intercept) = least_squares(&upper_envelope(&kept));
    Some((slope, intercept, span))
}

/// Envelope fit of `deviation <= T e^{alpha x}` from `(x, deviation)` samples.
///
/// Fails with the given hypothesis label when deviations do not decay: the
/// fitted envelope must drop by at least a factor two across the sampled range.
pub fn fit_exponential_bound(samples: &[(f64, f64)], which: Hypothesis) -> Result<ExpFit> {
    if samples.len() < 20 {
        return Err(Error::InsufficientSamples(format!("{} samples, need >= 20", samples.len())));
    }
    let lo = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 3.0 {
        return Err(Error::InsufficientSamples(format!("samples span {:.3} < 3 units", hi - lo)));
    }
    if let Some(p) = samples.iter().find(|p| !p.1.is_finite() || p.1 < 0.0) {
        return Err(Error::HypothesisFailed { which, detail: format!("invalid deviation {} at Re z = {}", p.1, p.0) });
    }
    let kept: Vec<(f64, f64)> = samples.iter().filter(|p| p.1 > NOISE_FLOOR).map(|p| (p.0, p.1.ln())).collect();
    let excluded = samples.len() - kept.len();
    if kept.is_empty() {
        return Ok(ExpFit::sentinel(samples.len()));
    }
    let span = kept.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - kept.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if kept.len() < 3 || span < 1.0 {
        // a handful of samples just above the floor carries no rate information
        let worst = kept.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).exp();
        if worst < 1e3 * NOISE_FLOOR {
            return Ok(ExpFit::sentinel(samples.len()));
        }
        return Err(Error::HypothesisFailed {
            which,
            detail: format!("deviation {worst:e} above the noise floor without a measurable trend"),
        });
    }
    let (alpha, intercept) = least_squares(&upper_envelope(&kept));
    if !(alpha > 0.0) || alpha * span < std::f64::consts::LN_2 {
        return Err(Error::HypothesisFailed {
            which,
            detail: format!("deviations do not decay (fitted exponent {alpha:.4} over {span:.2} units)"),
        });
    }
    let mut constant = intercept.exp() * SAFETY;
    for &(x, ly) in &kept {
        constant = constant.max((ly - alpha * x).exp());
    }
    let certified = kept.iter().all(|&(x, ly)| ly.exp() <= constant * (alpha * x).exp() * (1.0 + 1e-12));
    Ok(ExpFit { constant, exponent: alpha, samples: samples.len(), noise_excluded: excluded, certified })
}

/// Envelope fit of `difference <= T2 distance^beta` from `(distance, difference)` samples.
pub fn fit_holder_samples(samples: &[(f64, f64)]) -> Result<HolderFit> {
    if samples.len() < 20 {
        return Err(Error::InsufficientSamples(format!("{} pairs, need >= 20", samples.len())));
    }
    if let Some(p) = samples.iter().find(|p| !p.1.is_finite() || !(p.0 > 0.0)) {
        return Err(Error::HypothesisFailed {
            which: Hypothesis::Holder,
            detail: format!("invalid pair sample ({}, {})", p.0, p.1),
        });
    }
    let kept: Vec<(f64, f64)> =
        samples.iter().filter(|p| p.1 > NOISE_FLOOR).map(|p| (p.0.ln(), p.1.ln())).collect();
    let excluded = samples.len() - kept.len();
    if kept.len() < 3 {
        return Ok(HolderFit { constant: 0.0, exponent: 1.0, samples: samples.len(), noise_excluded: excluded, certified: true });
    }
    let (slope, _) = least_squares(&upper_envelope(&kept));
    if !(slope > 0.05) {
        return Err(Error::HypothesisFailed {
            which: Hypothesis::Holder,
            detail: format!("derivative differences do not shrink with distance (slope {slope:.4})"),
        });
    }
    let beta = slope.min(1.0);
    let env = upper_envelope(&kept);
    let intercept = env.iter().map(|p| p.1 - beta * p.0).sum::<f64>() / env.len() as f64;
    let mut constant = intercept.exp() * SAFETY;
    for &(lx, ly) in &kept {
        constant = constant.max((ly - beta * lx).exp());
    }
    let certified = kept.iter().all(|&(lx, ly)| ly.exp() <= constant * (beta * lx).exp() * (1.0 + 1e-12));
    Ok(HolderFit { constant, exponent: beta, samples: samples.len(), noise_excluded: excluded, certified })
}

/// Sample window `[t_lo, t_hi] x [-pi, pi]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Window {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Window {
    pub fn default_for(log_r: f64) -> Self {
        Self { t_lo: log_r - 8.0, t_hi: log_r - 1.0 }
    }

    /// `n x n` grid including both edges.
    pub fn grid(&self, n: usize) -> Vec<Complex> {
        let pi = std::f64::consts::PI;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let x = self.t_lo + (self.t_hi - self.t_lo) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let y = -pi + 2.0 * pi * j as f64 / (n - 1) as f64;
                out.push(Complex::new(x, y));
            }
        }
        out
    }

    /// The grid plus `extra` uniform random points.
    pub fn samples(&self, grid: usize, extra: usize, seed: u64) -> Vec<Complex> {
        let pi = std::f64::consts::PI;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.grid(grid);
        for _ in 0..extra {
            out.push(Complex::new(rng.random_range(self.t_lo..=self.t_hi), rng.random_range(-pi..pi)));
        }
        out
    }
}

/// Derivative field pairs `(u, v)` with `|u - v|` log-uniform in `[1e-3, 0.9]`.
pub fn holder_pairs(window: &Window, count: usize, seed: u64) -> Vec<(Complex, Complex)> {
    let pi = std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let (lo, hi) = (1e-3f64.ln(), 0.9f64.ln());
    let mut out = Vec::with_capacity(count);
    let anchors = [0.0, pi / 2.0, -pi / 2.0];
    for k in 0..count {
        let u = if k < anchors.len() * 4 {
            let x = window.t_lo + (window.t_hi - window.t_lo) * (k / anchors.len()) as f64 / 3.0;
            Complex::new(x, anchors[k % anchors.len()])
        } else {
            Complex::new(rng.random_range(window.t_lo..=window.t_hi), rng.random_range(-pi..pi))
        };
        let delta = rng.random_range(lo..hi).exp();
        let mut v = u + Complex::from_polar(delta, rng.random_range(-pi..pi));
        if v.re > window.t_hi {
            v.re = 2.0 * window.t_hi - v.re;
        }
        out.push((u, v));
    }
    out
}

/// Hölder fit of any derivative field over the given pairs.
pub fn fit_holder_field<F>(field: F, pairs: &[(Complex, Complex)]) -> Result<HolderFit>
where
    F: Fn(Complex) -> Result<(Complex, Complex)> + Sync + Send,
{
    let rows = par::map(pairs, |&(u, v)| -> Result<(f64, f64)> {
        let (a, b) = field(u)?;
        let (c, d) = field(v)?;
        Ok(((u - v).norm(), (a - c).norm().max((b - d).norm())))
    });
    let samples = rows.into_iter().collect::<Result<Vec<_>>>()?;
    fit_holder_samples(&samples)
}

pub fn fit_holder(sep: &SeparableLift, window: &Window, pair_count: usize, seed: u64) -> Result<HolderFit> {
    fit_holder_field(|z| Ok(sep.wirtinger(z)), &holder_pairs(window, pair_count, seed))
}

/// `(Re z, |f̃(z) - D̃(z)|)` over the sample points.
pub fn closeness_samples(lift: &HalfPlaneLift, sep: &SeparableLift, points: &[Complex]) -> Result<Vec<(f64, f64)>> {
    par::map(points, |&z| Ok((z.re, (lift.eval(z)? - sep.eval(z)).norm()))).into_iter().collect()
}

/// `(Re z, max(|f̃_z - D̃_z|, |f̃_zbar - D̃_zbar|))` over the sample points.
pub fn derivative_samples(lift: &HalfPlaneLift, sep: &SeparableLift, points: &[Complex]) -> Result<Vec<(f64, f64)>> {
    par::map(points, |&z| {
        let (a, b) = lift.wirtinger(z)?;
        let (c, d) = sep.wirtinger(z);
        Ok((z.re, (a - c).norm().max((b - d).norm())))
    })
    .into_iter()
    .collect()
}

pub fn fit_derivative_closeness(lift: &HalfPlaneLift, sep: &SeparableLift, points: &[Complex]) -> Result<ExpFit> {
    fit_exponential_bound(&derivative_samples(lift, sep, points)?, Hypothesis::DerivativeCloseness)
}

/// `sup (1 + |mu|) / (1 - |mu|)` of `D̃` over the points, and `sup |mu|`.
pub fn maximal_dilatation(sep: &SeparableLift, points: &[Complex]) -> Result<(f64, f64)> {
    let mut mu_max = 0.0f64;
    for &z in points {
        let (a, b) = sep.wirtinger(z);
        let mu = b.norm() / a.norm();
        if !(mu < 1.0) {
            return Err(Error::DegenerateDerivative { z, fz_abs: a.norm(), fzbar_abs: b.norm() });
        }
        mu_max = mu_max.max(mu);
    }
    Ok(((1.0 + mu_max) / (1.0 - mu_max), mu_max))
}

/// Bi-Lipschitz constant of `D̃` from its derivatives over the points,
/// combined with the profile's constant.
pub fn bilipschitz(sep: &SeparableLift, points: &[Complex]) -> f64 {
    let mut l = sep.profile.l_estimate.max(1.0);
    for &z in points {
        let (a, b) = sep.wirtinger(z);
        let upper = a.norm() + b.norm();
        let lower = a.norm() - b.norm();
        l = l.max(upper);
        if lower > 0.0 {
            l = l.max(1.0 / lower);
        } else {
            l = f64::INFINITY;
        }
    }
    l
}

pub fn nu(alpha: f64, beta: f64, beta_prime: f64) -> f64 {
    (alpha * beta).min(beta_prime)
}

/// Admissibility bound on the multiplier: `min(L^{-1/alpha}, K^{-1/nu})` when
/// attracting, `max(L^{1/alpha}, K^{1/nu})` when repelling.
pub fn threshold_bound(l: f64, alpha: f64, k: f64, nu: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Attracting => l.powf(-1.0 / alpha).min(k.powf(-1.0 / nu)),
        Mode::Repelling => l.powf(1.0 / alpha).max(k.powf(1.0 / nu)),
    }
}

/// Verdict and margin (positive when admissible).
pub fn threshold_check(l: f64, alpha: f64, k: f64, nu: f64, lambda: f64, mode: Mode, bypass: bool) -> (bool, f64) {
    let bound = threshold_bound(l, alpha, k, nu, mode);
    let margin = match mode {
        Mode::Attracting => bound - lambda,
        Mode::Repelling => lambda - bound,
    };
    (bypass || margin > 0.0, margin)
}

/// Constants of the inverse lifts assembled from the forward ones.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Transfer {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s2_prime: f64,
    pub delta: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

/// Transfers repelling constants `(S1, S2, S3)` for `f̃, D̃` into attracting
/// constants `(T1, T2, T3)` for `f̃^{-1}, D̃^{-1}`.
///
/// `mu_inf` is `sup |mu_D̃|` and `t_hi` the top of the window, which bounds
/// `e^{beta' Re u}` by `delta = S3 e^{beta' t_hi}`.
#[allow(clippy::too_many_arguments)]
pub fn repelling_transfer(
    s: (f64, f64, f64),
    l: f64,
    lambda: f64,
    alpha: f64,
    beta: f64,
    beta_prime: f64,
    mu_inf: f64,
    t_hi: f64,
) -> Result<Transfer> {
    let (s1, s2, s3) = s;
    if !(lambda > 1.0) {
        return Err(Error::InvalidParameter(format!("repelling transfer needs lambda > 1, got {lambda}")));
    }
    if !(mu_inf < 1.0) {
        return Err(Error::InvalidParameter(format!("sup |mu| = {mu_inf} is not below 1")));
    }
    let t1 = if s1 == 0.0 { 0.0 } else { l * s1 * (1.0 / lambda).powf(alpha) };
    let jac_lower = (1.0 - mu_inf * mu_inf) / (l * l);
    let s2_prime = if s2 == 0.0 { 0.0 } else { (1.0 / jac_lower).powi(2) * (l * 4.0 * l * s2 + l * l * s2) };
    let t2 = s2_prime * l.powf(beta);
    let delta = if s3 == 0.0 { 0.0 } else { s3 * (beta_prime * t_hi).exp() };
    let nu = nu(alpha, beta, beta_prime);
    let t3 = if s3 == 0.0 && t1 == 0.0 {
        0.0
    } else {
        let jj = jac_lower * (jac_lower - 2.0 * l * delta);
        if !(jj > 0.0) {
            return Err(Error::HypothesisFailed {
                which: Hypothesis::DerivativeCloseness,
                detail: format!("derivative deviation {delta:e} too large for the Jacobian lower bound"),
            });
        }
        let pq = if t1 == 0.0 { 0.0 } else { t1.powf(beta) };
        let sp = if s3 == 0.0 { 0.0 } else { s3 * lambda.powf(beta_prime) };
        let num = (l + delta) * (4.0 * l * s2 * pq + 2.0 * (2.0 * l + delta) * sp) + (l + delta).powi(2) * (sp + s2 * pq);
        // e^{alpha beta Re u} and e^{beta' Re u} relative to e^{nu Re u} on Re u < t_hi
        let lift = |e: f64| if e.is_finite() && nu.is_finite() { ((e - nu) * t_hi).exp().max(1.0) } else { 1.0 };
        num * lift(alpha * beta).max(lift(beta_prime)) / jj
    };
    Ok(Transfer { s1, s2, s3, s2_prime, delta, t1, t2, t3 })
}

/// Smallest constant with which `deviation <= T e^{exponent x}` holds on the samples.
pub fn dominating_constant(samples: &[(f64, f64)], exponent: f64) -> f64 {
    samples
        .iter()
        .filter(|p| p.1 > NOISE_FLOOR)
        .map(|p| if exponent.is_finite() { p.1 * (-exponent * p.0).exp() } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleCounts {
    pub closeness: usize,
    pub holder: usize,
    pub derivative: usize,
}

/// All fitted constants for one run.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub mode: Mode,
    #[serde(rename = "T1")]
    pub t1: f64,
    pub alpha: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub beta: f64,
    #[serde(rename = "T3")]
    pub t3: f64,
    pub beta_prime: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "K_dtilde")]
    pub k_dtilde: f64,
    pub mu_sup: f64,
    pub nu: f64,
    pub lambda: f64,
    pub threshold_bound: f64,
    pub threshold_margin: f64,
    pub threshold_ok: bool,
    pub bypass: bool,
    pub window: Window,
    pub sample_counts: SampleCounts,
    pub certified: bool,
    pub seed: u64,
    /// Forward fits and the transfer, for repelling runs.
    pub transfer: Option<Transfer>,
    /// Directly refitted inverse-lift constants `(T1, T2, T3)` with the transferred exponents.
    pub direct_inverse: Option<(f64, f64, f64)>,
}

pub struct ReportInput<'a> {
    pub lift: &'a HalfPlaneLift,
    pub sep: &'a SeparableLift,
    pub window: Window,
    pub lambda: f64,
    pub mode: Mode,
    pub bypass: bool,
    pub seed: u64,
    pub grid: usize,
    pub extra: usize,
    pub pair_count: usize,
}

/// Fits (a), (b), (c) on `f̃` and `D̃`, and for repelling runs transfers them
/// to the inverse lifts and re-checks the transfer directly on samples.
pub fn hypothesis_report(input: &ReportInput) -> Result<HypothesisReport> {
    let ReportInput { lift, sep, window, lambda, mode, bypass, seed, grid, extra, pair_count } = *input;
    let points = window.samples(grid, extra, seed);
    let close = closeness_samples(lift, sep, &points)?;
    let a = fit_exponential_bound(&close, Hypothesis::Closeness)?;
    let b = fit_holder(sep, &window, pair_count, seed)?;
    let c = fit_derivative_closeness(lift, sep, &points)?;
    let l = bilipschitz(sep, &points);
    let (k, mu_sup) = maximal_dilatation(sep, &points)?;
    let nu_val = nu(a.exponent, b.exponent, c.exponent);
    let (ok, margin) = threshold_check(l, a.exponent, k, nu_val, lambda, mode, bypass);
    let counts = SampleCounts { closeness: close.len(), holder: b.samples, derivative: c.samples };
    let certified = a.certified && b.certified && c.certified;
    let mut report = HypothesisReport {
        mode,
        t1: a.constant,
        alpha: a.exponent,
        t2: b.constant,
        beta: b.exponent,
        t3: c.constant,
        beta_prime: c.exponent,
        l,
        k_dtilde: k,
        mu_sup,
        nu: nu_val,
        lambda,
        threshold_bound: threshold_bound(l, a.exponent, k, nu_val, mode),
        threshold_margin: margin,
        threshold_ok: ok,
        bypass,
        window,
        sample_counts: counts,
        certified,
        seed,
        transfer: None,
        direct_inverse: None,
    };
    if mode == Mode::Repelling {
        let tr = repelling_transfer(
            (a.constant, b.constant, c.constant),
            l,
            lambda,
            a.exponent,
            b.exponent,
            c.exponent,
            mu_sup,
            window.t_hi,
        )?;
        report.transfer = Some(tr);
        report.t1 = tr.t1;
        report.t2 = tr.t2;
        report.t3 = tr.t3;
        report.beta_prime = nu_val;
        report.direct_inverse = Some(direct_inverse_constants(lift, sep, &points, &report)?);
    }
    Ok(report)
}

/// Constants measured on `f̃^{-1}`, `D̃^{-1}` at points of the window, using
/// the exponents of the report.
fn direct_inverse_constants(
    lift: &HalfPlaneLift,
    sep: &SeparableLift,
    points: &[Complex],
    report: &HypothesisReport,
) -> Result<(f64, f64, f64)> {
    let rows = par::map(points, |&w| -> Result<(f64, f64, f64, Complex, Complex)> {
        let q = sep.inverse(w)?;
        let p = lift.inverse(w, q)?;
        let (fa, fb) = lift.wirtinger(p)?;
        let (da, db) = sep.wirtinger(q);
        let (ia, ib) = crate::maps::wirtinger_inverse(fa, fb)?;
        let (ja, jb) = crate::maps::wirtinger_inverse(da, db)?;
        Ok((w.re, (p - q).norm(), (ia - ja).norm().max((ib - jb).norm()), ja, jb))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let close: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let deriv: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.2)).collect();
    let t1 = dominating_constant(&close, report.alpha);
    let t3 = dominating_constant(&deriv, report.beta_prime);
    // Hölder constant of the inverse representative's derivatives over nearby pairs
    let pairs = holder_pairs(&report.window, 256, report.seed);
    let field = |w: Complex| -> Result<(Complex, Complex)> {
        let q = sep.inverse(w)?;
        let (da, db) = sep.wirtinger(q);
        crate::maps::wirtinger_inverse(da, db)
    };
    let diffs = par::map(&pairs, |&(u, v)| -> Result<(f64, f64)> {
        let (a, b) = field(u)?;
        let (c, d) = field(v)?;
        Ok(((u - v).norm(), (a - c).norm().max((b - d).norm())))
    });
    let diffs = diffs.into_iter().collect::<Result<Vec<_>>>()?;
    let t2 = diffs
        .iter()
        .filter(|p| p.1 > NOISE_FLOOR)
        .map(|p| p.1 / p.0.powf(report.beta))
        .fold(0.0, f64::max);
    Ok((t1, t2, t3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::SeparableLift;
    use crate::radial::RadialProfile;

    fn synthetic(t: f64, alpha: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let x = -8.0 + 7.0 * i as f64 / (n - 1) as f64;
                let wobble = 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0;
                (x, t * (alpha * x).exp() / wobble)
            })
            .collect()
    }

    #[test]
    fn exponential_fit_recovers_rate_and_dominates() {
        let s = synthetic(0.3, 1.0, 400);
        let fit = fit_exponential_bound(&s, Hypothesis::Closeness).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05, "{}", fit.exponent);
        assert!(fit.certified);
        assert!(s.iter().all(|&(x, y)| y <= fit.bound(x) * (1.0 + 1e-12)));
    }

    #[test]
    fn exponential_fit_sentinel_and_failure() {
        let zero: Vec<(f64, f64)> = (0..40).map(|i| (-8.0 + 0.2 * i as f64, 0.0)).collect();
        let fit = fit_exponential_bound(&zero, Hypothesis::Closeness).unwrap();
        assert!(fit.is_sentinel() && fit.exponent.is_infinite());
        let flat: Vec<(f64, f64)> = (0..40).map(|i| (-8.0 + 0.2 * i as f64, 0.1)).collect();
        assert!(matches!(
            fit_exponential_bound(&flat, Hypothesis::Closeness),
            Err(Error::HypothesisFailed { which: Hypothesis::Closeness, .. })
        ));
        assert!(fit_exponential_bound(&flat[..10], Hypothesis::Closeness).is_err());
    }

    #[test]
    fn holder_fit_of_affine_is_sentinel() {
        let p = RadialProfile::affine(2.0, 0.0, -50.0, 0.0, 1).unwrap();
        let sep = SeparableLift::monomial(p, 0.0, 64).unwrap();
        let fit = fit_holder(&sep, &Window::default_for(0.0), 200, 0).unwrap();
        assert_eq!(fit.constant, 0.0);
        assert_eq!(fit.exponent, 1.0);
    }

    #[test]
    fn holder_fit_detects_square_root_modulus() {
        // derivative field with a |y|^{1/2} cusp along the real axis
        let field = |z: Complex| -> Result<(Complex, Complex)> {
            let s = 0.15 * z.im.abs().sqrt() * z.im.signum();
            Ok((Complex::new(1.0 + 0.5 * s, 0.0), Complex::new(-0.5 * s, 0.0)))
        };
        let window = Window::default_for(0.0);
        let mut pairs = holder_pairs(&window, 400, 1);
        for (i, p) in pairs.iter_mut().enumerate().take(200) {
            let delta = (1e-3f64.ln() + (0.9f64.ln() - 1e-3f64.ln()) * i as f64 / 199.0).exp();
            *p = (Complex::new(-3.0, 0.0), Complex::new(-3.0, delta));
        }
        let fit = fit_holder_field(field, &pairs).unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.1, "{}", fit.exponent);
        assert!(fit.certified);
    }

    #[test]
    fn dilatation_examples() {
        let conformal = SeparableLift::monomial(RadialProfile::affine(3.0, 0.0, -50.0, 0.0, 3).unwrap(), 0.0, 64).unwrap();
        let pts = Window::default_for(0.0).grid(5);
        assert!((maximal_dilatation(&conformal, &pts).unwrap().0 - 1.0).abs() < 1e-12);
        let zz = SeparableLift::monomial(RadialProfile::affine(2.0, 0.0, -50.0, 0.0, 1).unwrap(), 0.0, 64).unwrap();
        let (k, mu) = maximal_dilatation(&zz, &pts).unwrap();
        assert!((mu - 1.0 / 3.0).abs() < 1e-12 && (k - 2.0).abs() < 1e-12);
        let sr = SeparableLift::monomial(RadialProfile::affine(0.5, 0.0, -50.0, 0.0, 2).unwrap(), 0.0, 64).unwrap();
        let (a, b) = sr.wirtinger(Complex::new(-2.0, 0.3));
        assert!((a - 1.25).norm() < 1e-12 && (b + 0.75).norm() < 1e-12);
        let (k, _) = maximal_dilatation(&sr, &pts).unwrap();
        assert!((k - 4.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_examples() {
        assert!(threshold_check(1.0, 1.0, 1.0, 1.0, 0.5, Mode::Attracting, false).0);
        let (ok, margin) = threshold_check(2.0, 1.0, 2.0, 1.0, 0.6, Mode::Attracting, false);
        assert!(!ok && (margin + 0.1).abs() < 1e-12);
        assert!(threshold_check(1.0, 1.0, 1.0, 1.0, 2.0, Mode::Repelling, false).0);
        assert!(threshold_check(2.0, 1.0, 2.0, 1.0, 0.6, Mode::Attracting, true).0);
        // sentinels leave only lambda < 1
        assert!(threshold_check(3.0, f64::INFINITY, 5.0, f64::INFINITY, 0.9, Mode::Attracting, false).0);
        assert!((nu(2.0, 0.5, 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transfer_examples() {
        let t = repelling_transfer((0.0, 0.0, 0.0), 2.0, 4.0, 1.0, 1.0, 1.0, 0.6, -1.0).unwrap();
        assert_eq!((t.t1, t.t2, t.t3), (0.0, 0.0, 0.0));
        let t = repelling_transfer((1.0, 0.0, 0.0), 1.0, 2.0, 1.0, 1.0, 1.0, 0.0, -1.0).unwrap();
        assert!((t.t1 - 0.5).abs() < 1e-15);
        assert!(repelling_transfer((1.0, 0.0, 0.0), 1.0, 0.5, 1.0, 1.0, 1.0, 0.0, -1.0).is_err());
        let t = repelling_transfer((0.1, 0.2, 0.3), 1.1, 2.0, 1.0, 1.0, 1.0, 0.1, -1.0).unwrap();
        assert!(t.t2 > 0.0 && t.t3 > 0.0 && t.s2_prime > 0.2);
    }

    #[test]
    fn window_samples_are_deterministic() {
        let w = Window::default_for(0.0);
        assert_eq!(w.samples(5, 20, 3), w.samples(5, 20, 3));
        assert_ne!(w.samples(5, 20, 3), w.samples(5, 20, 4));
        assert_eq!(w.grid(33).len(), 33 * 33);
    }
}
