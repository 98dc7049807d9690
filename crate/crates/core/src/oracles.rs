//! Classical coordinates used as independent checks on holomorphic inputs:
//! Königs `lim lambda^{-n} f^n`, Böttcher `exp(lim f̃^n(log z) / d^n)`, and the
//! one-dimensional conjugacies `h` of the mean radius `rho_f` to its model,
//! assembled into `H(r e^{i theta}) = h(r) e^{i theta}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lift::HalfPlaneLift;
use crate::par;
use crate::radial::RadialProfile;
use crate::Complex;

fn horner(coeffs: &[Complex], z: Complex) -> (Complex, Complex) {
    // coeffs[0] multiplies z
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    // f = z p(z), f' = p + z p'
    (z * p, p + z * dp)
}

/// `f(z) = sum a_n z^n` with `coeffs[0] = a_1`.
pub fn series_eval(coeffs: &[Complex], z: Complex) -> Complex {
    horner(coeffs, z).0
}

/// `(f(z), f'(z))`.
pub fn series_eval_with_derivative(coeffs: &[Complex], z: Complex) -> (Complex, Complex) {
    horner(coeffs, z)
}

/// `lim lambda^{-n} f^n(z)` for `0 < |lambda| < 1`.
pub fn koenigs(coeffs: &[Complex], lambda: Complex, z: Complex, n_max: usize, tol: f64) -> Result<Complex> {
    let l = lambda.norm();
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::InvalidParameter(format!("Koenigs limit needs 0 < |lambda| < 1, got {l}")));
    }
    let mut w = z;
    let mut scale = Complex::new(1.0, 0.0);
    let mut prev = z;
    for _ in 0..n_max {
        w = series_eval(coeffs, w);
        scale /= lambda;
        let next = w * scale;
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        if (next - prev).norm() < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence { operation: "koenigs", detail: format!("no limit within {n_max} steps at z = {z}") })
}

/// The branch of `f^{-1}` fixing 0, by Newton from `w / f'(0)`.
pub fn inverse_branch(coeffs: &[Complex], w: Complex) -> Result<Complex> {
    let mut z = w / coeffs[0];
    for _ in 0..60 {
        let (f, df) = series_eval_with_derivative(coeffs, z);
        let step = (f - w) / df;
        z -= step;
        if step.norm() <= 1e-16 * z.norm().max(1e-300) {
            return Ok(z);
        }
    }
    let res = (series_eval(coeffs, z) - w).norm();
    if res <= 1e-14 * w.norm() {
        return Ok(z);
    }
    Err(Error::NonConvergence { operation: "inverse_branch", detail: format!("residual {res:e} at w = {w}") })
}

/// Königs coordinate of a repelling fixed point, `lim lambda^n g^n(z)` with
/// `g` the local inverse branch; satisfies `phi(f(z)) = lambda phi(z)`.
pub fn koenigs_repelling(coeffs: &[Complex], lambda: Complex, z: Complex, n_max: usize, tol: f64) -> Result<Complex> {
    let l = lambda.norm();
    if !(l > 1.0) {
        return Err(Error::InvalidParameter(format!("repelling Koenigs limit needs |lambda| > 1, got {l}")));
    }
    let mut w = z;
    let mut scale = Complex::new(1.0, 0.0);
    let mut prev = z;
    for _ in 0..n_max {
        w = inverse_branch(coeffs, w)?;
        scale *= lambda;
        let next = w * scale;
        if (next - prev).norm() < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        operation: "koenigs_repelling",
        detail: format!("no limit within {n_max} steps at z = {z}"),
    })
}

/// `exp(lim f̃^n(log z) / d^n)`; satisfies `phi(f(z)) = phi(z)^d`.
pub fn boettcher(lift: &HalfPlaneLift, d: u32, z: Complex, n_max: usize, tol: f64) -> Result<Complex> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("Boettcher limit needs d >= 2, got {d}")));
    }
    if z.norm() == 0.0 {
        return Ok(z);
    }
    let df = d as f64;
    let mut w = z.ln();
    let mut scale = 1.0;
    let mut prev = w;
    for _ in 0..n_max {
        w = lift.eval(w)?;
        scale /= df;
        let next = w * scale;
        if (next - prev).norm() < tol {
            return Ok(next.exp());
        }
        prev = next;
    }
    Err(Error::NonConvergence { operation: "boettcher", detail: format!("no limit within {n_max} steps at z = {z}") })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialMode {
    /// `h(rho(r)) = lambda h(r)` with `lambda = rho'(0)`.
    Koenigs,
    /// `h(rho(r)) = h(r)^d`.
    Boettcher,
}

/// The one-dimensional conjugacy `h` of the mean radius, in log coordinates:
/// `h̃(rho~(t)) = h̃(t) + log lambda` or `h̃(rho~(t)) = d h̃(t)`.
#[derive(Debug, Clone)]
pub struct RadialConjugacy {
    pub profile: RadialProfile,
    pub mode: RadialMode,
    /// `log lambda` in Königs mode, `log d` in Böttcher mode.
    pub log_factor: f64,
    pub n_max: usize,
    pub tol: f64,
}

impl RadialConjugacy {
    /// `log lambda` read from the deepest profile node.
    pub fn new(profile: RadialProfile, mode: RadialMode) -> Result<Self> {
        let log_factor = match mode {
            RadialMode::Koenigs => {
                let t = profile.t_grid()[0];
                let ll = profile.eval(t) - t;
                if ll.abs() < 1e-6 {
                    return Err(Error::InvalidParameter("radial multiplier is 1; no Koenigs conjugacy".into()));
                }
                ll
            }
            RadialMode::Boettcher => {
                if profile.degree < 2 {
                    return Err(Error::InvalidParameter("Boettcher radial conjugacy needs degree >= 2".into()));
                }
                (profile.degree as f64).ln()
            }
        };
        Ok(Self { profile, mode, log_factor, n_max: 400, tol: 1e-15 })
    }

    pub fn lambda(&self) -> f64 {
        self.log_factor.exp()
    }

    /// `h̃(t) = log h(e^t)`.
    pub fn h_tilde(&self, t: f64) -> Result<f64> {
        let mut s = t;
        let mut prev = t;
        match self.mode {
            RadialMode::Koenigs if self.log_factor < 0.0 => {
                for n in 1..=self.n_max {
                    s = self.profile.eval(s);
                    let next = s - n as f64 * self.log_factor;
                    if (next - prev).abs() <= self.tol * next.abs().max(1.0) {
                        return Ok(next);
                    }
                    prev = next;
                }
            }
            RadialMode::Koenigs => {
                for n in 1..=self.n_max {
                    s = self.profile.inverse(s)?;
                    let next = s + n as f64 * self.log_factor;
                    if (next - prev).abs() <= self.tol * next.abs().max(1.0) {
                        return Ok(next);
                    }
                    prev = next;
                }
            }
            RadialMode::Boettcher => {
                let d = self.profile.degree as f64;
                let mut scale = 1.0;
                for _ in 0..self.n_max {
                    s = self.profile.eval(s);
                    scale /= d;
                    let next = s * scale;
                    if (next - prev).abs() <= self.tol * next.abs().max(1.0) {
                        return Ok(next);
                    }
                    prev = next;
                }
            }
        }
        Err(Error::NonConvergence { operation: "sternberg_radial", detail: format!("no limit at t = {t}") })
    }

    pub fn h(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(self.h_tilde(r.ln())?.exp())
    }

    /// `h^{-1}(s)` by bisection on the increasing `h̃`.
    pub fn h_inverse(&self, s: f64) -> Result<f64> {
        let target = s.ln();
        let (mut lo, mut hi) = (target - 50.0, target + 50.0);
        let hi_cap = self.profile.t_grid()[self.profile.t_grid().len() - 1];
        hi = hi.min(hi_cap);
        if self.h_tilde(lo)? > target || self.h_tilde(hi)? < target {
            return Err(Error::InvalidParameter(format!("h^-1({s}) outside the profile range")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.h_tilde(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * mid.abs().max(1.0) {
                break;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// `H(r e^{i theta}) = h(r) e^{i theta}`.
    pub fn big_h(&self, z: Complex) -> Result<Complex> {
        let r = z.norm();
        if r == 0.0 {
            return Ok(z);
        }
        Ok(z * (self.h(r)? / r))
    }
}

/// `h(r)` for the given profile and mode.
pub fn sternberg_radial(profile: &RadialProfile, mode: RadialMode, r: f64, n_max: usize, tol: f64) -> Result<f64> {
    let mut h = RadialConjugacy::new(profile.clone(), mode)?;
    h.n_max = n_max;
    h.tol = tol;
    h.h(r)
}

/// Fits one complex constant `c` aligning `H(ψ)` with `phi` over the probe
/// points and returns `sup |c H(ψ(z)) - phi(z)| / sup |phi|`.
pub fn compare_full<P, Q>(psi: P, phi: Q, h: &RadialConjugacy, probe: &[Complex]) -> Result<f64>
where
    P: Fn(Complex) -> Result<Complex> + Sync + Send,
    Q: Fn(Complex) -> Result<Complex> + Sync + Send,
{
    let rows = par::map(probe, |&z| -> Result<(Complex, Complex)> { Ok((h.big_h(psi(z)?)?, phi(z)?)) });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let num: Complex = rows.iter().map(|(a, b)| a.conj() * b).sum();
    let den: f64 = rows.iter().map(|(a, _)| a.norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("degenerate normalization fit".into()));
    }
    let c = num / den;
    let sup_phi = rows.iter().map(|(_, b)| b.norm()).fold(0.0, f64::max);
    let sup_dev = rows.iter().map(|(a, b)| (c * a - b).norm()).fold(0.0, f64::max);
    Ok(sup_dev / sup_phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::PlanarMap;
    use crate::radial::radial_profile;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn koenigs_examples() {
        let lam = c(0.5, 0.2);
        let z = c(0.03, 0.01);
        assert!((koenigs(&[lam], lam, z, 200, 1e-16).unwrap() - z).norm() < 1e-15);
        let f = [c(0.5, 0.0), c(0.1, 0.0)];
        let z = c(0.05, 0.0);
        let phi = koenigs(&f, f[0], z, 500, 1e-17).unwrap();
        let lhs = koenigs(&f, f[0], series_eval(&f, z), 500, 1e-17).unwrap();
        assert!((lhs - 0.5 * phi).norm() < 1e-10);
        assert!(koenigs(&[c(1.2, 0.0)], c(1.2, 0.0), z, 10, 1e-12).is_err());
    }

    #[test]
    fn repelling_koenigs_satisfies_functional_equation() {
        let f = [c(2.0, 0.0), c(0.3, 0.0)];
        for z in [c(0.04, 0.01), c(-0.02, 0.03)] {
            let phi = koenigs_repelling(&f, f[0], z, 200, 1e-17).unwrap();
            let lhs = koenigs_repelling(&f, f[0], series_eval(&f, z), 200, 1e-17).unwrap();
            assert!((lhs - 2.0 * phi).norm() < 1e-12);
        }
    }

    #[test]
    fn boettcher_examples() {
        let sq = PlanarMap::holomorphic(vec![c(0.0, 0.0), c(1.0, 0.0)], 1.0).unwrap();
        let lift = HalfPlaneLift::new(&sq).unwrap();
        let z = c(0.04, -0.03);
        assert!((boettcher(&lift, 2, z, 100, 1e-16).unwrap() - z).norm() < 1e-14);
        let f = PlanarMap::holomorphic(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0)], 1.0).unwrap();
        let lift = HalfPlaneLift::new(&f).unwrap();
        for z in [c(0.05, 0.0), c(0.02, 0.04)] {
            let phi = boettcher(&lift, 2, z, 100, 1e-16).unwrap();
            let lhs = boettcher(&lift, 2, f.eval(z).unwrap(), 100, 1e-16).unwrap();
            assert!((lhs - phi * phi).norm() < 1e-9 * phi.norm_sqr());
        }
        assert!(boettcher(&lift, 1, z, 10, 1e-12).is_err());
    }

    #[test]
    fn radial_conjugacy_examples() {
        let lin = RadialProfile::affine(1.0, 0.3f64.ln(), -40.0, -0.5, 1).unwrap();
        assert!((sternberg_radial(&lin, RadialMode::Koenigs, 0.2, 100, 1e-15).unwrap() - 0.2).abs() < 1e-14);

        // rho(r) = (0.25 r^2 + 2 r^4)^{1/2}, the mean radius of 0.5 z + z^2
        let t: Vec<f64> = (0..=800).map(|j| -40.0 + 0.05 * j as f64).collect();
        let rt: Vec<f64> = t.iter().map(|&s| 0.5 * (0.25 * (2.0 * s).exp() + 2.0 * (4.0 * s).exp()).ln()).collect();
        let sl: Vec<f64> = t
            .iter()
            .map(|&s| {
                let (a, b) = (0.25 * (2.0 * s).exp(), 2.0 * (4.0 * s).exp());
                (a + 2.0 * b) / (a + b)
            })
            .collect();
        let p = RadialProfile::from_samples(t.clone(), rt, Some(sl), 1).unwrap();
        let h = RadialConjugacy::new(p.clone(), RadialMode::Koenigs).unwrap();
        assert!((h.lambda() - 0.5).abs() < 1e-12);
        for r in [0.05, 0.1, 0.2] {
            let rho = p.rho(r);
            assert!((h.h(rho).unwrap() - 0.5 * h.h(r).unwrap()).abs() < 1e-9 * r);
        }

        // rho(r) = r^2 (1 + r)
        let rt: Vec<f64> = t.iter().map(|&s| 2.0 * s + s.exp().ln_1p()).collect();
        let sl: Vec<f64> = t.iter().map(|&s| 2.0 + s.exp() / (1.0 + s.exp())).collect();
        let p = RadialProfile::from_samples(t, rt, Some(sl), 2).unwrap();
        let h = RadialConjugacy::new(p.clone(), RadialMode::Boettcher).unwrap();
        for r in [0.05, 0.1, 0.3] {
            let hr = h.h(r).unwrap();
            assert!((h.h(p.rho(r)).unwrap() - hr * hr).abs() < 1e-9 * hr * hr);
        }
    }

    #[test]
    fn big_h_commutes_with_rotations_and_inverts() {
        let f = PlanarMap::holomorphic(vec![c(0.5, 0.0), c(0.1, 0.0)], 1.0).unwrap();
        let p = radial_profile(&f, -40.0, -0.5, 791).unwrap();
        let h = RadialConjugacy::new(p, RadialMode::Koenigs).unwrap();
        let z = c(0.03, 0.02);
        for w in [0.3, -2.0, 3.0] {
            let rot = Complex::cis(w);
            assert!((h.big_h(rot * z).unwrap() - rot * h.big_h(z).unwrap()).norm() < 1e-15);
        }
        let s = h.h(0.04).unwrap();
        assert!((h.h_inverse(s).unwrap() - 0.04).abs() < 1e-12);
    }

    #[test]
    fn compare_full_of_matching_maps_is_zero() {
        let lin = RadialProfile::affine(1.0, 0.5f64.ln(), -40.0, -0.5, 1).unwrap();
        let h = RadialConjugacy::new(lin, RadialMode::Koenigs).unwrap();
        let probe: Vec<Complex> = (1..20).map(|j| Complex::from_polar(0.002 * j as f64, j as f64)).collect();
        let d = compare_full(Ok, |z| Ok(c(0.0, 3.0) * z), &h, &probe).unwrap();
        assert!(d < 1e-12, "{d}");
    }
}
