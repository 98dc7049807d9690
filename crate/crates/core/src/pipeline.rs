//! End-to-end runs shared by the command line and the browser demo:
//! classification, representative, lifts, hypothesis fits, iteration and
//! verification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conjugacy::{self, BoundParams, Conjugacy, ConjugacyResult, ConjugacySummary};
use crate::error::{Error, Hypothesis, Result};
use crate::estimates::{hypothesis_report, HypothesisReport, Mode, ReportInput, Window};
use crate::infinitesimal::{asymptotic_rep, scale_ladder, simplicity_check, AsymptoticRep};
use crate::lift::{build_separable, HalfPlaneLift, SeparableLift};
use crate::maps::{circle_extremes, classify_fixed_point, default_ladder, local_index, FixedPointClass, FixedPointTag, MapKind, PlanarMap};
use crate::oracles::{boettcher, compare_full, koenigs, koenigs_repelling, RadialConjugacy, RadialMode};
use crate::radial::{radial_profile, resolve_degree, RadialProfile};
use crate::spec::{MapSpec, SpecFile};
use crate::Complex;

/// Depth of the radial profile below `log R`.
pub const PROFILE_DEPTH: f64 = 40.0;
pub const PROFILE_SPACING: f64 = 0.05;
/// Number of scales used to extract the generalized derivative.
pub const SCALE_COUNT: usize = 40;
const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeChoice {
    #[default]
    Auto,
    Attracting,
    Repelling,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub mode: ModeChoice,
    /// Sup Cauchy gap at which the iteration stops.
    pub tol: f64,
    pub k_max: usize,
    /// Probe grid is `grid x grid` over the window.
    pub grid: usize,
    /// Largest acceptable conjugacy residual.
    pub residual_tol: f64,
    /// Overrides the seed recorded in the spec file.
    pub seed: Option<u64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self { mode: ModeChoice::Auto, tol: 1e-10, k_max: 60, grid: 33, residual_tol: 1e-6, seed: None }
    }
}

/// Process exit code for an error: 2 parse, 4 hypothesis, 5 divergence or
/// domain escape, 3 any other numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) => 2,
        Error::HypothesisFailed { .. } => 4,
        Error::Divergence(_) | Error::DomainEscape { .. } => 5,
        _ => 3,
    }
}

/// Everything computed before the iteration starts.
#[derive(Debug, Clone)]
pub struct Setup {
    pub spec: SpecFile,
    pub map: PlanarMap,
    pub class: FixedPointClass,
    pub degree: u32,
    pub profile: RadialProfile,
    pub rep: AsymptoticRep,
    /// True when `D` is known in closed form rather than extracted.
    pub exact_representative: bool,
    pub lift: HalfPlaneLift,
    pub sep: SeparableLift,
    pub window: Window,
    pub lambda: f64,
    pub mode: Mode,
    pub mode_matches_class: bool,
    pub seed: u64,
}

fn class_mode(tag: FixedPointTag) -> Option<Mode> {
    if tag.is_attracting() {
        Some(Mode::Attracting)
    } else if tag.is_repelling() {
        Some(Mode::Repelling)
    } else {
        None
    }
}

/// `sup |f(z)|/|z|` (attracting) or `inf |f(z)|/|z|` (repelling) on circles
/// `|z| = e^t` from the top of the window twenty units down.
fn working_lambda(map: &PlanarMap, t_hi: f64, mode: Mode) -> Result<f64> {
    let mut out = match mode {
        Mode::Attracting => 0.0f64,
        Mode::Repelling => f64::INFINITY,
    };
    for j in 0..=20 {
        let (hi, lo) = circle_extremes(map, (t_hi - j as f64).exp())?;
        out = match mode {
            Mode::Attracting => out.max(hi),
            Mode::Repelling => out.min(lo),
        };
    }
    Ok(out)
}

pub fn profile_for(map: &PlanarMap) -> Result<RadialProfile> {
    let log_r = map.domain_radius.ln();
    let (t_min, t_max) = (log_r - PROFILE_DEPTH, log_r - 0.5);
    let count = ((t_max - t_min) / PROFILE_SPACING).round() as usize + 1;
    radial_profile(map, t_min, t_max, count)
}

fn representative(spec: &SpecFile, map: &PlanarMap, degree: u32) -> Result<(RadialProfile, AsymptoticRep, bool)> {
    let log_r = map.domain_radius.ln();
    let (t_min, t_max) = (log_r - PROFILE_DEPTH, log_r - 0.5);
    let closed = match (&spec.representative, &map.kind) {
        (Some(MapSpec::RadialPower { c, n, m, .. }), _) => Some((Complex::new(c[0], c[1]), *n, *m)),
        (None, MapKind::RadialPower { c, n, m }) => Some((*c, *n, *m)),
        _ => None,
    };
    if let Some((c, n, m)) = closed {
        if n != degree {
            return Err(Error::IndexMismatch { computed: degree as i64, declared: n });
        }
        let rep = AsymptoticRep::radial_power(c, n, m, t_min, t_max)?;
        return Ok((rep.profile.clone(), rep, true));
    }
    let profile = profile_for(map)?;
    let rep = asymptotic_rep(map, &profile, &scale_ladder(map.domain_radius, SCALE_COUNT))?;
    Ok((profile, rep, false))
}

pub fn setup(spec: &SpecFile, settings: &Settings) -> Result<Setup> {
    let map = spec.map.build()?;
    let class = classify_fixed_point(&map, &default_ladder(map.domain_radius))?;
    let degree = resolve_degree(&map)?;
    let natural = class_mode(class.tag);
    let mode = match (settings.mode, natural) {
        (ModeChoice::Attracting, _) => Mode::Attracting,
        (ModeChoice::Repelling, _) => Mode::Repelling,
        (ModeChoice::Auto, Some(m)) => m,
        (ModeChoice::Auto, None) => {
            return Err(Error::HypothesisFailed {
                which: Hypothesis::Threshold,
                detail: "fixed point is neither attracting nor repelling on the sampled ladder".into(),
            })
        }
    };
    let mode_matches_class = natural == Some(mode);
    let log_r = map.domain_radius.ln();
    let t_hi = if mode_matches_class { (log_r - 1.0).min(class.radius_of_validity.ln()) } else { log_r - 1.0 };
    let window = Window { t_lo: t_hi - 7.0, t_hi };
    let (profile, rep, exact_representative) = representative(spec, &map, degree)?;
    let lift = HalfPlaneLift::new(&map)?;
    let mut sep = build_separable(&rep)?;
    sep.align_to(&lift, window.t_lo)?;
    let lambda = working_lambda(&map, t_hi, mode)?;
    Ok(Setup {
        spec: spec.clone(),
        map,
        class,
        degree,
        profile,
        rep,
        exact_representative,
        lift,
        sep,
        window,
        lambda,
        mode,
        mode_matches_class,
        seed: settings.seed.unwrap_or(spec.seed),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BipSample {
    pub t: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub class: FixedPointTag,
    pub lambda: f64,
    pub radius_of_validity: f64,
    pub d: u32,
    pub local_index: i64,
    pub simple: bool,
    pub defect: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub bip_max: f64,
    pub bip_ladder: Vec<BipSample>,
    pub ladder: Vec<(f64, f64, f64)>,
    pub seed: u64,
}

pub fn analyze(spec: &SpecFile, settings: &Settings) -> Result<Analysis> {
    let map = spec.map.build()?;
    let class = classify_fixed_point(&map, &default_ladder(map.domain_radius))?;
    let index = local_index(&map, 1e-3 * map.domain_radius)?;
    let degree = resolve_degree(&map)?;
    let profile = profile_for(&map)?;
    let simple = simplicity_check(&map, &profile, &scale_ladder(map.domain_radius, SCALE_COUNT))?;
    let lift = HalfPlaneLift::new(&map)?;
    let t_hi = map.domain_radius.ln() - 1.0;
    let mut bip_ladder = Vec::new();
    for j in 0..8 {
        let t = t_hi - j as f64;
        bip_ladder.push(BipSample { t, energy: lift.bip_integral(t)? });
    }
    let bip_max = bip_ladder.iter().map(|b| b.energy).fold(0.0, f64::max);
    Ok(Analysis {
        class: class.tag,
        lambda: class.lambda_estimate,
        radius_of_validity: class.radius_of_validity,
        d: degree,
        local_index: index,
        simple: simple.simple,
        defect: simple.defect,
        l: profile.l_estimate,
        bip_max,
        bip_ladder,
        ladder: class.ladder,
        seed: settings.seed.unwrap_or(spec.seed),
    })
}

#[derive(Debug, Clone)]
pub struct Linearization {
    pub setup: Setup,
    pub report: Option<HypothesisReport>,
    pub result: ConjugacyResult,
    /// 0 on success, 4 when the run contradicts the classification, 5 when
    /// it did not converge or the residual is too large.
    pub exit_code: i32,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizeSummary {
    pub seed: u64,
    pub class: FixedPointTag,
    pub degree: u32,
    pub mode: Mode,
    pub lambda: f64,
    pub exact_representative: bool,
    pub window: Window,
    pub hypotheses: Option<HypothesisReport>,
    pub conjugacy: ConjugacySummary,
    pub exit_code: i32,
    pub message: Option<String>,
}

impl Linearization {
    pub fn summary(&self) -> LinearizeSummary {
        LinearizeSummary {
            seed: self.setup.seed,
            class: self.setup.class.tag,
            degree: self.setup.degree,
            mode: self.setup.mode,
            lambda: self.setup.lambda,
            exact_representative: self.setup.exact_representative,
            window: self.setup.window,
            hypotheses: self.report.clone(),
            conjugacy: self.result.summary(),
            exit_code: self.exit_code,
            message: self.message.clone(),
        }
    }

    /// Rings inside `min(0.05 R, e^{t_hi}/2)` on which the residual is measured.
    pub fn probe_disk(&self) -> Vec<Complex> {
        residual_disk(&self.setup)
    }
}

fn residual_disk(setup: &Setup) -> Vec<Complex> {
    let radius = (0.05 * setup.map.domain_radius).min(0.5 * setup.window.t_hi.exp());
    conjugacy::probe_disk(radius, 8, 16)
}

pub fn linearize(spec: &SpecFile, settings: &Settings) -> Result<Linearization> {
    let setup = setup(spec, settings)?;
    linearize_from(setup, settings)
}

pub fn linearize_from(setup: Setup, settings: &Settings) -> Result<Linearization> {
    let report = if setup.mode_matches_class {
        let report = hypothesis_report(&ReportInput {
            lift: &setup.lift,
            sep: &setup.sep,
            window: setup.window,
            lambda: setup.lambda,
            mode: setup.mode,
            bypass: setup.class.tag.is_super(),
            seed: setup.seed,
            grid: settings.grid,
            extra: 256,
            pair_count: 512,
        })?;
        if !report.threshold_ok {
            return Err(Error::HypothesisFailed {
                which: Hypothesis::Threshold,
                detail: format!(
                    "multiplier {:.6} misses the admissible bound {:.6}",
                    report.lambda, report.threshold_bound
                ),
            });
        }
        Some(report)
    } else {
        None
    };
    let bounds = match (&report, setup.mode) {
        (Some(r), Mode::Attracting) => BoundParams { l: r.l, t1: r.t1, alpha: r.alpha, lambda: setup.lambda },
        (Some(r), Mode::Repelling) => BoundParams { l: r.l, t1: r.t1, alpha: r.alpha, lambda: 1.0 / setup.lambda },
        (None, _) => BoundParams { l: 1.0, t1: 0.0, alpha: f64::INFINITY, lambda: 0.5 },
    };
    let probe = setup.window.grid(settings.grid.max(2));
    let conj = Conjugacy::new(setup.lift.clone(), setup.sep.clone(), setup.mode);
    let mut result = conjugacy::iterate(conj, bounds, &probe, settings.tol, settings.k_max)?;
    let map = setup.map.clone();
    let residual = conjugacy::residual(&result.conj, |z| map.eval(z), &residual_disk(&setup))?;
    result.residual = Some(residual);
    result.mu_decay = Some(conjugacy::dilatation_decay(&result.conj, setup.window.t_lo, setup.window.t_hi, 12)?);
    let (exit_code, message) = if !result.converged {
        (5, Some(format!("no convergence within {} steps", settings.k_max)))
    } else if !(residual < settings.residual_tol) {
        (5, Some(format!("residual {residual:e} exceeds {:e}", settings.residual_tol)))
    } else if !setup.mode_matches_class {
        (4, Some(format!("mode {} contradicts the {} classification", setup.mode.as_str(), setup.class.tag.as_str())))
    } else {
        (0, None)
    };
    Ok(Linearization { setup, report, result, exit_code, message })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: Option<String>,
}

impl Check {
    fn below(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: value < limit, value, limit, detail: None }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Self { name: name.into(), passed, value: if passed { 1.0 } else { 0.0 }, limit: 1.0, detail: None }
    }

    fn failed(name: &str, err: &Error) -> Self {
        Self { name: name.into(), passed: false, value: f64::NAN, limit: f64::NAN, detail: Some(err.to_string()) }
    }
}

fn invariant_points(window: &Window, seed: u64, count: usize) -> Vec<Complex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let pi = std::f64::consts::PI;
    (0..count)
        .map(|_| Complex::new(rng.random_range(window.t_lo..window.t_hi), rng.random_range(-pi..pi)))
        .collect()
}

fn sup<F: Fn(Complex) -> Result<f64>>(points: &[Complex], f: F) -> Result<f64> {
    let mut out = 0.0f64;
    for &z in points {
        out = out.max(f(z)?);
    }
    Ok(out)
}

fn push<F: FnOnce() -> Result<f64>>(checks: &mut Vec<Check>, name: &str, limit: f64, f: F) {
    checks.push(match f() {
        Ok(v) => Check::below(name, v, limit),
        Err(e) => Check::failed(name, &e),
    });
}

/// Structural invariants of the lifts and of `ψ̃` at seeded random points.
pub fn invariant_checks(lin: &Linearization) -> Vec<Check> {
    let s = &lin.setup;
    let conj = &lin.result.conj;
    let pts = invariant_points(&s.window, s.seed, 32);
    let period = Complex::new(0.0, 2.0 * std::f64::consts::PI);
    let d = s.degree as f64;
    let mut checks = Vec::new();
    push(&mut checks, "lift_periodicity", INVARIANT_TOL, || {
        sup(&pts, |z| Ok((s.lift.eval(z + period)? - s.lift.eval(z)? - d * period).norm()))
    });
    push(&mut checks, "exp_conjugation", INVARIANT_TOL, || {
        sup(&pts, |z| {
            let want = s.map.eval(z.exp())?;
            Ok((s.lift.eval(z)?.exp() - want).norm() / want.norm())
        })
    });
    push(&mut checks, "psi_periodicity", INVARIANT_TOL, || {
        sup(&pts, |z| Ok((conj.psi_tilde(z + period)? - conj.psi_tilde(z)? - period).norm()))
    });
    push(&mut checks, "descend_branch_independence", INVARIANT_TOL, || {
        sup(&pts, |z| {
            let w = z.exp();
            let a = conj.psi_on_branch(w, 0)?;
            Ok((a - conj.psi_on_branch(w, 1)?).norm() / a.norm())
        })
    });
    push(&mut checks, "telescoping", INVARIANT_TOL, || {
        let k = conj.k;
        sup(&pts, |z| {
            let lhs = match s.mode {
                Mode::Attracting => s.sep.eval(conj.psi_tilde_k(z, k)?),
                Mode::Repelling => s.sep.inverse(conj.psi_tilde_k(z, k)?)?,
            };
            let rhs = conj.psi_tilde_k(conj.forward(z)?, k - 1)?;
            Ok((lhs - rhs).norm())
        })
    });
    checks
}

fn bip_check(lin: &Linearization) -> Check {
    let s = &lin.setup;
    let ladder: Result<Vec<f64>> = (0..4).map(|j| s.lift.bip_integral(s.window.t_hi - 2.0 * j as f64)).collect();
    match (ladder, &s.map.kind) {
        (Ok(v), MapKind::RadialPower { n, .. }) => {
            let want = 2.0 * std::f64::consts::PI * (*n as f64).powi(2);
            let dev = v.iter().map(|e| (e - want).abs() / want).fold(0.0, f64::max);
            Check::below("bip_closed_form", dev, 1e-8)
        }
        (Ok(v), _) => {
            let max = v.iter().copied().fold(0.0, f64::max);
            Check { name: "bip_bounded".into(), passed: max.is_finite(), value: max, limit: f64::INFINITY, detail: None }
        }
        (Err(e), _) => Check::failed("bip_bounded", &e),
    }
}

/// Discrepancy between `H ∘ ψ` and the classical coordinate for holomorphic
/// inputs: Königs when `d = 1`, Böttcher when `d >= 2`.
pub fn oracle_check(lin: &Linearization) -> Option<Check> {
    let s = &lin.setup;
    let MapKind::HolomorphicSeries { coeffs } = &s.map.kind else {
        return None;
    };
    if s.spec.representative.is_some() || !s.mode_matches_class {
        return None;
    }
    let probe = lin.probe_disk();
    let psi = |z: Complex| lin.result.psi(z);
    let (name, limit, value) = if s.degree == 1 {
        let lambda = coeffs[0];
        let h = match RadialConjugacy::new(s.profile.clone(), RadialMode::Koenigs) {
            Ok(h) => h,
            Err(e) => return Some(Check::failed("koenigs_agreement", &e)),
        };
        match s.mode {
            Mode::Attracting => {
                ("koenigs_agreement", 1e-4, compare_full(psi, |z| koenigs(coeffs, lambda, z, 2000, 1e-17), &h, &probe))
            }
            Mode::Repelling => (
                "koenigs_inverse_branch_agreement",
                1e-3,
                compare_full(psi, |z| koenigs_repelling(coeffs, lambda, z, 2000, 1e-17), &h, &probe),
            ),
        }
    } else {
        let h = match RadialConjugacy::new(s.profile.clone(), RadialMode::Boettcher) {
            Ok(h) => h,
            Err(e) => return Some(Check::failed("boettcher_agreement", &e)),
        };
        let d = s.degree;
        ("boettcher_agreement", 1e-4, compare_full(psi, |z| boettcher(&s.lift, d, z, 200, 1e-16), &h, &probe))
    };
    Some(match value {
        Ok(v) => Check::below(name, v, limit),
        Err(e) => Check::failed(name, &e),
    })
}

/// Runs the linearization and every applicable check.
pub fn verify(spec: &SpecFile, settings: &Settings) -> Vec<Check> {
    let lin = match linearize(spec, settings) {
        Ok(l) => l,
        Err(e) => return vec![Check::failed("linearize", &e)],
    };
    let r = &lin.result;
    let mut checks = vec![
        Check::flag("converged", r.converged),
        Check::below("residual", r.residual.unwrap_or(f64::INFINITY), settings.residual_tol),
    ];
    if lin.report.is_some() {
        checks.push(Check::flag("lemma_first_step_bound", r.lemma_check));
        checks.push(Check::flag("uniform_error_bound", r.bound_check));
        checks.push(Check::flag("cauchy_contraction", r.ratio_check));
    }
    checks.extend(invariant_checks(&lin));
    checks.push(bip_check(&lin));
    if let Some(c) = oracle_check(&lin) {
        checks.push(c);
    }
    checks
}

/// `PASS`/`FAIL` table, one check per line.
pub fn format_checks(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let line = match &c.detail {
            Some(d) => format!("{verdict}  {:<34} {d}\n", c.name),
            None => format!("{verdict}  {:<34} {:.3e} (limit {:.1e})\n", c.name, c.value, c.limit),
        };
        out.push_str(&line);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Divergence("x".into())), 5);
        assert_eq!(
            exit_code(&Error::HypothesisFailed { which: Hypothesis::Closeness, detail: String::new() }),
            4
        );
        assert_eq!(exit_code(&Error::NonConvergence { operation: "x", detail: String::new() }), 3);
    }

    #[test]
    fn radial_power_runs_to_identity() {
        let spec = SpecFile::parse(r#"{"kind":"radial_power","C":[1,0],"n":1,"m":1}"#).unwrap();
        let lin = linearize(&spec, &Settings::default()).unwrap();
        assert_eq!(lin.exit_code, 0, "{:?}", lin.message);
        assert!(lin.result.residual.unwrap() < 1e-10);
        assert!(invariant_checks(&lin).iter().all(|c| c.passed));
    }
}
