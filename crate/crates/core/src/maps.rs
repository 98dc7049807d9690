//! Planar map germs fixing the origin, their Wirtinger calculus, local index
//! and fixed-point classification.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Complex;

/// Points closer than this to a declared branch point are refused.
pub const BRANCH_FLOOR: f64 = 1e-9;

/// User-supplied map contract for families without a closed form here.
pub trait CustomMap: Send + Sync {
    fn eval(&self, z: Complex) -> Complex;

    /// Closed-form `(f_z, f_zbar)`, if available.
    fn wirtinger(&self, _z: Complex) -> Option<(Complex, Complex)> {
        None
    }

    /// Branch points other than the origin.
    fn branch_points(&self) -> Vec<Complex> {
        Vec::new()
    }

    fn name(&self) -> &str {
        "custom"
    }
}

#[derive(Clone)]
pub enum MapKind {
    /// `C z^n |z|^m`.
    RadialPower { c: Complex, n: u32, m: f64 },
    /// `sum a_k z^k`, `coeffs[0] = a_1`.
    HolomorphicSeries { coeffs: Vec<Complex> },
    /// Applied right to left: the last map acts first.
    Composition(Vec<PlanarMap>),
    /// `C z^n |z|^m (1 + eps P(z))` with `P(z) = sum b_k z^k`, `series[0] = b_1`.
    PerturbedRadial { c: Complex, n: u32, m: f64, eps: f64, series: Vec<Complex> },
    Custom(Arc<dyn CustomMap>),
}

impl fmt::Debug for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::RadialPower { c, n, m } => write!(f, "RadialPower(C={c}, n={n}, m={m})"),
            MapKind::HolomorphicSeries { coeffs } => write!(f, "HolomorphicSeries({coeffs:?})"),
            MapKind::Composition(maps) => f.debug_tuple("Composition").field(maps).finish(),
            MapKind::PerturbedRadial { c, n, m, eps, series } => write!(
                f,
                "PerturbedRadial(C={c}, n={n}, m={m}, eps={eps}, series={series:?})"
            ),
            MapKind::Custom(c) => write!(f, "Custom({})", c.name()),
        }
    }
}

/// An evaluable map germ `f` with `f(0) = 0` on the disk `|z| < domain_radius`.
#[derive(Debug, Clone)]
pub struct PlanarMap {
    pub kind: MapKind,
    pub declared_index: Option<u32>,
    pub domain_radius: f64,
}

fn check_radial(n: u32, m: f64) -> Result<()> {
    if n < 1 || !m.is_finite() || n as f64 + m <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "radial power needs n >= 1 and n + m > 0 (n = {n}, m = {m})"
        )));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("domain radius must be positive, got {r}")));
    }
    Ok(())
}

fn horner(coeffs: &[Complex], z: Complex) -> Complex {
    // sum_{k>=1} coeffs[k-1] z^k
    let mut acc = Complex::new(0.0, 0.0);
    for a in coeffs.iter().rev() {
        acc = acc * z + a;
    }
    acc * z
}

fn horner_derivative(coeffs: &[Complex], z: Complex) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    for (k, a) in coeffs.iter().enumerate().rev() {
        acc = acc * z + a * (k + 1) as f64;
    }
    acc
}

fn radial_eval(c: Complex, n: u32, m: f64, z: Complex) -> Complex {
    let r = z.norm();
    if r == 0.0 {
        return Complex::new(0.0, 0.0);
    }
    c * z.powu(n) * r.powf(m)
}

fn radial_wirtinger(c: Complex, n: u32, m: f64, z: Complex) -> (Complex, Complex) {
    let r = z.norm();
    let nf = n as f64;
    let fz = c * (nf + 0.5 * m) * z.powu(n - 1) * r.powf(m);
    let fzb = c * (0.5 * m) * z.powu(n + 1) * r.powf(m - 2.0);
    (fz, fzb)
}

/// Chain rule for `g∘f` given `(g_z, g_zbar)` at `f(z)` and `(f_z, f_zbar)` at `z`.
pub fn chain_rule(outer: (Complex, Complex), inner: (Complex, Complex)) -> (Complex, Complex) {
    let (gz, gzb) = outer;
    let (fz, fzb) = inner;
    (gz * fz + gzb * fzb.conj(), gz * fzb + gzb * fz.conj())
}

impl PlanarMap {
    pub fn radial_power(c: Complex, n: u32, m: f64, domain_radius: f64) -> Result<Self> {
        check_radial(n, m)?;
        check_radius(domain_radius)?;
        if c.norm() == 0.0 {
            return Err(Error::InvalidParameter("radial power needs C != 0".into()));
        }
        Ok(Self { kind: MapKind::RadialPower { c, n, m }, declared_index: None, domain_radius })
    }

    pub fn holomorphic(coeffs: Vec<Complex>, domain_radius: f64) -> Result<Self> {
        check_radius(domain_radius)?;
        if coeffs.iter().all(|a| a.norm() == 0.0) {
            return Err(Error::InvalidParameter("holomorphic series has no nonzero coefficient".into()));
        }
        Ok(Self { kind: MapKind::HolomorphicSeries { coeffs }, declared_index: None, domain_radius })
    }

    pub fn perturbed_radial(
        c: Complex,
        n: u32,
        m: f64,
        eps: f64,
        series: Vec<Complex>,
        domain_radius: f64,
    ) -> Result<Self> {
        check_radial(n, m)?;
        check_radius(domain_radius)?;
        if c.norm() == 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParameter("perturbed radial needs C != 0 and finite eps".into()));
        }
        Ok(Self {
            kind: MapKind::PerturbedRadial { c, n, m, eps, series },
            declared_index: None,
            domain_radius,
        })
    }

    /// `maps[0] ∘ maps[1] ∘ ... ∘ maps[last]`.
    pub fn composition(maps: Vec<PlanarMap>, domain_radius: f64) -> Result<Self> {
        check_radius(domain_radius)?;
        if maps.is_empty() {
            return Err(Error::InvalidParameter("empty composition".into()));
        }
        Ok(Self { kind: MapKind::Composition(maps), declared_index: None, domain_radius })
    }

    pub fn custom(map: Arc<dyn CustomMap>, domain_radius: f64) -> Result<Self> {
        check_radius(domain_radius)?;
        Ok(Self { kind: MapKind::Custom(map), declared_index: None, domain_radius })
    }

    pub fn with_index(mut self, d: u32) -> Self {
        self.declared_index = Some(d);
        self
    }

    /// The index implied by the family's closed form, when there is one.
    pub fn natural_degree(&self) -> Option<u32> {
        match &self.kind {
            MapKind::RadialPower { n, .. } | MapKind::PerturbedRadial { n, .. } => Some(*n),
            MapKind::HolomorphicSeries { coeffs } => {
                coeffs.iter().position(|a| a.norm() > 0.0).map(|i| i as u32 + 1)
            }
            MapKind::Composition(maps) => {
                maps.iter().map(|m| m.natural_degree()).try_fold(1u32, |acc, d| d.map(|d| acc * d))
            }
            MapKind::Custom(_) => None,
        }
    }

    /// True when `f` is holomorphic by construction.
    pub fn is_holomorphic(&self) -> bool {
        match &self.kind {
            MapKind::HolomorphicSeries { .. } => true,
            MapKind::RadialPower { m, .. } | MapKind::PerturbedRadial { m, .. } => *m == 0.0,
            MapKind::Composition(maps) => maps.iter().all(|m| m.is_holomorphic()),
            MapKind::Custom(_) => false,
        }
    }

    pub fn branch_points(&self) -> Vec<Complex> {
        match &self.kind {
            MapKind::Custom(c) => c.branch_points(),
            _ => Vec::new(),
        }
    }

    fn check_domain(&self, z: Complex) -> Result<()> {
        if !(z.norm() < self.domain_radius) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::OutOfDomain { z, radius: self.domain_radius });
        }
        Ok(())
    }

    fn check_branch(&self, z: Complex) -> Result<()> {
        for p in self.branch_points() {
            if (z - p).norm() < BRANCH_FLOOR {
                return Err(Error::BranchPoint { point: p, floor: BRANCH_FLOOR });
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex) -> Result<Complex> {
        self.check_domain(z)?;
        if z.norm() == 0.0 {
            return Ok(Complex::new(0.0, 0.0));
        }
        self.check_branch(z)?;
        Ok(match &self.kind {
            MapKind::RadialPower { c, n, m } => radial_eval(*c, *n, *m, z),
            MapKind::HolomorphicSeries { coeffs } => horner(coeffs, z),
            MapKind::PerturbedRadial { c, n, m, eps, series } => {
                radial_eval(*c, *n, *m, z) * (1.0 + *eps * horner(series, z))
            }
            MapKind::Composition(maps) => {
                let mut w = z;
                for map in maps.iter().rev() {
                    w = map.eval(w)?;
                }
                w
            }
            MapKind::Custom(c) => c.eval(z),
        })
    }

    /// Closed-form Wirtinger derivatives, or `None` when only finite differences apply.
    pub fn analytic_wirtinger(&self, z: Complex) -> Result<Option<(Complex, Complex)>> {
        self.check_domain(z)?;
        self.check_branch(z)?;
        let zero = Complex::new(0.0, 0.0);
        Ok(match &self.kind {
            MapKind::RadialPower { c, n, m } => {
                if z.norm() == 0.0 {
                    if *m != 0.0 {
                        return Err(Error::BranchPoint { point: zero, floor: BRANCH_FLOOR });
                    }
                    return Ok(Some((if *n == 1 { *c } else { zero }, zero)));
                }
                Some(radial_wirtinger(*c, *n, *m, z))
            }
            MapKind::HolomorphicSeries { coeffs } => Some((horner_derivative(coeffs, z), zero)),
            MapKind::PerturbedRadial { c, n, m, eps, series } => {
                if z.norm() == 0.0 {
                    return Err(Error::BranchPoint { point: zero, floor: BRANCH_FLOOR });
                }
                let b = radial_eval(*c, *n, *m, z);
                let (bz, bzb) = radial_wirtinger(*c, *n, *m, z);
                let p = 1.0 + *eps * horner(series, z);
                let dp = *eps * horner_derivative(series, z);
                Some((bz * p + b * dp, bzb * p))
            }
            MapKind::Composition(maps) => {
                let mut points = Vec::with_capacity(maps.len());
                let mut w = z;
                for map in maps.iter().rev() {
                    points.push(w);
                    w = map.eval(w)?;
                }
                let mut acc: Option<(Complex, Complex)> = None;
                for (map, p) in maps.iter().rev().zip(points) {
                    let Some(d) = map.analytic_wirtinger(p)? else {
                        return Ok(None);
                    };
                    acc = Some(match acc {
                        None => d,
                        Some(inner) => chain_rule(d, inner),
                    });
                }
                acc
            }
            MapKind::Custom(c) => c.wirtinger(z),
        })
    }

    /// Fourth-order central differences with step `1e-6 |z|` (`1e-10` at the origin).
    pub fn wirtinger_fd(&self, z: Complex) -> Result<(Complex, Complex)> {
        self.check_domain(z)?;
        self.check_branch(z)?;
        let scale = if z.norm() > 0.0 { z.norm() } else { 1e-4 };
        let h = 1e-6 * scale;
        if h < f64::MIN_POSITIVE * 1e6 {
            return Err(Error::InvalidParameter("finite-difference step underflow".into()));
        }
        let stencil = |dir: Complex| -> Result<Complex> {
            let f = |s: f64| self.eval(z + dir * (s * h));
            Ok((f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h))
        };
        let fx = stencil(Complex::new(1.0, 0.0))?;
        let fy = stencil(Complex::new(0.0, 1.0))?;
        let i = Complex::i();
        Ok((0.5 * (fx - i * fy), 0.5 * (fx + i * fy)))
    }

    /// `(f_z, f_zbar)`: closed form when available, finite differences otherwise.
    pub fn wirtinger(&self, z: Complex) -> Result<(Complex, Complex)> {
        match self.analytic_wirtinger(z)? {
            Some(d) => Ok(d),
            None => self.wirtinger_fd(z),
        }
    }

    pub fn jacobian(&self, z: Complex) -> Result<f64> {
        let (fz, fzb) = self.wirtinger(z)?;
        Ok(fz.norm_sqr() - fzb.norm_sqr())
    }

    /// Complex dilatation `mu_f = f_zbar / f_z`.
    pub fn dilatation(&self, z: Complex) -> Result<Complex> {
        let (fz, fzb) = self.wirtinger(z)?;
        dilatation_from(z, fz, fzb)
    }
}

pub(crate) fn dilatation_from(z: Complex, fz: Complex, fzb: Complex) -> Result<Complex> {
    if fz.norm() <= fzb.norm() || fz.norm() == 0.0 {
        return Err(Error::DegenerateDerivative { z, fz_abs: fz.norm(), fzbar_abs: fzb.norm() });
    }
    Ok(fzb / fz)
}

/// `r_f = conj(f_z) / f_z`, the unimodular factor in the composition formula.
pub fn rotation_factor(fz: Complex) -> Complex {
    fz.conj() / fz
}

/// Dilatation of `g∘f` from `mu_f`, `r_f` and `mu_g` at `f(z)`.
pub fn mu_compose(mu_f: Complex, r_f: Complex, mu_g_at_fz: Complex) -> Result<Complex> {
    let den = 1.0 + r_f * mu_f.conj() * mu_g_at_fz;
    if den.norm() < 1e-14 {
        return Err(Error::DegenerateDerivative {
            z: Complex::new(0.0, 0.0),
            fz_abs: den.norm(),
            fzbar_abs: 0.0,
        });
    }
    Ok((mu_f + r_f * mu_g_at_fz) / den)
}

/// Wirtinger derivatives of `f^{-1}` at `f(z)` from those of `f` at `z`.
pub fn wirtinger_inverse(fz: Complex, fzb: Complex) -> Result<(Complex, Complex)> {
    let jac = fz.norm_sqr() - fzb.norm_sqr();
    if !(jac > 0.0) || jac < 1e-300 {
        return Err(Error::VanishingJacobian { jacobian: jac });
    }
    Ok((fz.conj() / jac, -fzb / jac))
}

/// The same derivatives written through the dilatation:
/// `1/(f_z(1-|mu|^2))` and `-mu/(conj(f_z)(1-|mu|^2))`.
pub fn wirtinger_inverse_via_dilatation(fz: Complex, fzb: Complex) -> Result<(Complex, Complex)> {
    let mu = dilatation_from(Complex::new(0.0, 0.0), fz, fzb)
        .map_err(|_| Error::VanishingJacobian { jacobian: fz.norm_sqr() - fzb.norm_sqr() })?;
    let s = 1.0 - mu.norm_sqr();
    Ok((1.0 / (fz * s), -mu / (fz.conj() * s)))
}

/// Winding number of `theta -> f(r e^{i theta})` about 0.
pub fn local_index(map: &PlanarMap, probe_radius: f64) -> Result<i64> {
    const N: usize = 512;
    const MAX_DEPTH: u32 = 12;
    if !(probe_radius > 0.0 && probe_radius < map.domain_radius) {
        return Err(Error::OutOfDomain { z: Complex::new(probe_radius, 0.0), radius: map.domain_radius });
    }
    let point = |theta: f64| -> Result<Complex> {
        let w = map.eval(Complex::from_polar(probe_radius, theta))?;
        if w.norm() == 0.0 {
            return Err(Error::VanishingValue { z: Complex::from_polar(probe_radius, theta) });
        }
        Ok(w)
    };
    fn increment(
        point: &dyn Fn(f64) -> Result<Complex>,
        a: f64,
        b: f64,
        wa: Complex,
        wb: Complex,
        depth: u32,
        radius: f64,
    ) -> Result<f64> {
        let d = (wb / wa).arg();
        if d.abs() <= PI / 2.0 {
            return Ok(d);
        }
        if depth == 0 {
            if d.abs() < PI {
                return Ok(d);
            }
            return Err(Error::UnstableWinding { radius });
        }
        let mid = 0.5 * (a + b);
        let wm = point(mid)?;
        Ok(increment(point, a, mid, wa, wm, depth - 1, radius)?
            + increment(point, mid, b, wm, wb, depth - 1, radius)?)
    }
    let step = 2.0 * PI / N as f64;
    let mut total = 0.0;
    let first = point(-PI)?;
    let mut prev = first;
    for j in 1..=N {
        let theta = -PI + step * j as f64;
        let w = if j == N { first } else { point(theta)? };
        total += increment(&point, theta - step, theta, prev, w, MAX_DEPTH, probe_radius)?;
        prev = w;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Computes the local index and checks it against the declared one.
pub fn checked_index(map: &PlanarMap, probe_radius: f64) -> Result<u32> {
    let d = local_index(map, probe_radius)?;
    if let Some(declared) = map.declared_index {
        if d != declared as i64 {
            return Err(Error::IndexMismatch { computed: d, declared });
        }
    }
    if d < 1 {
        return Err(Error::IndexMismatch { computed: d, declared: map.declared_index.unwrap_or(1) });
    }
    Ok(d as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointTag {
    GeometricallyAttracting,
    Superattracting,
    GeometricallyRepelling,
    Superrepelling,
    Indeterminate,
}

impl FixedPointTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FixedPointTag::GeometricallyAttracting => "geometrically_attracting",
            FixedPointTag::Superattracting => "superattracting",
            FixedPointTag::GeometricallyRepelling => "geometrically_repelling",
            FixedPointTag::Superrepelling => "superrepelling",
            FixedPointTag::Indeterminate => "indeterminate",
        }
    }

    pub fn is_attracting(self) -> bool {
        matches!(self, FixedPointTag::GeometricallyAttracting | FixedPointTag::Superattracting)
    }

    pub fn is_repelling(self) -> bool {
        matches!(self, FixedPointTag::GeometricallyRepelling | FixedPointTag::Superrepelling)
    }

    pub fn is_super(self) -> bool {
        matches!(self, FixedPointTag::Superattracting | FixedPointTag::Superrepelling)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointClass {
    pub tag: FixedPointTag,
    pub lambda_estimate: f64,
    pub radius_of_validity: f64,
    /// `(r, M(r), m(r))` along the ladder.
    pub ladder: Vec<(f64, f64, f64)>,
}

/// Default ladder: 16 radii from `R/2` with ratio 1/2.
pub fn default_ladder(domain_radius: f64) -> Vec<f64> {
    (0..16).map(|k| 0.5 * domain_radius * 0.5f64.powi(k)).collect()
}

/// Circle maximum and minimum of `|f(z)|/r` over 512 angles.
pub fn circle_extremes(map: &PlanarMap, r: f64) -> Result<(f64, f64)> {
    let mut hi = 0.0f64;
    let mut lo = f64::INFINITY;
    for j in 0..512 {
        let theta = -PI + 2.0 * PI * j as f64 / 512.0;
        let q = map.eval(Complex::from_polar(r, theta))?.norm() / r;
        hi = hi.max(q);
        lo = lo.min(q);
    }
    Ok((hi, lo))
}

/// Classifies the fixed point at 0 from circle extremes along a decreasing ladder.
pub fn classify_fixed_point(map: &PlanarMap, radii: &[f64]) -> Result<FixedPointClass> {
    if radii.len() < 2 {
        return Err(Error::InsufficientSamples("classification needs at least two radii".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii[0] >= map.domain_radius || radii[radii.len() - 1] <= 0.0 {
        return Err(Error::InvalidParameter("radii must decrease inside the domain".into()));
    }
    let mut ladder = Vec::with_capacity(radii.len());
    for &r in radii {
        let (hi, lo) = circle_extremes(map, r)?;
        ladder.push((r, hi, lo));
    }
    let last = ladder[ladder.len() - 1];
    let slack = 1.0 + 1e-9;
    let big_m_decreasing = ladder.windows(2).all(|w| w[1].1 <= w[0].1 * slack);
    let small_m_increasing = ladder.windows(2).all(|w| w[1].2 * slack >= w[0].2);
    // innermost run of radii on which |f(z)| < |z| (resp. > |z|) holds throughout
    let contracting = ladder.iter().rev().take_while(|e| e.1 < 1.0).count();
    let expanding = ladder.iter().rev().take_while(|e| e.2 > 1.0).count();
    let tail = |count: usize| &ladder[ladder.len() - count..];
    let (tag, lambda, valid) = if last.1 < 0.05 && big_m_decreasing && contracting > 0 {
        (FixedPointTag::Superattracting, last.1, tail(contracting)[0].0)
    } else if last.2 > 20.0 && small_m_increasing && expanding > 0 {
        (FixedPointTag::Superrepelling, last.2, tail(expanding)[0].0)
    } else if contracting > 0 {
        let run = tail(contracting);
        (FixedPointTag::GeometricallyAttracting, run.iter().map(|e| e.1).fold(0.0, f64::max), run[0].0)
    } else if expanding > 0 {
        let run = tail(expanding);
        (FixedPointTag::GeometricallyRepelling, run.iter().map(|e| e.2).fold(f64::INFINITY, f64::min), run[0].0)
    } else {
        (FixedPointTag::Indeterminate, last.1, radii[0])
    };
    Ok(FixedPointClass { tag, lambda_estimate: lambda, radius_of_validity: valid, ladder })
}
