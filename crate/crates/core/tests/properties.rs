use std::f64::consts::PI;

use num_complex::Complex64 as Complex;
use proptest::prelude::*;

use qrlin::estimates::fit_exponential_bound;
use qrlin::infinitesimal::AsymptoticRep;
use qrlin::lift::{build_separable, HalfPlaneLift};
use qrlin::maps::{chain_rule, mu_compose, wirtinger_inverse, wirtinger_inverse_via_dilatation, PlanarMap};
use qrlin::radial::series_mean_radius;
use qrlin::Hypothesis;

fn complex_in_disk(radius: f64) -> impl Strategy<Value = Complex> {
    (0.0..radius, -PI..PI).prop_map(|(r, t)| Complex::from_polar(r, t))
}

fn nonzero_complex() -> impl Strategy<Value = Complex> {
    (0.2f64..3.0, -PI..PI).prop_map(|(r, t)| Complex::from_polar(r, t))
}

/// `(C, n, m)` with `n + m` bounded away from zero.
fn radial_params() -> impl Strategy<Value = (Complex, u32, f64)> {
    (nonzero_complex(), 1u32..4).prop_flat_map(|(c, n)| (Just(c), Just(n), (0.3 - n as f64)..2.0))
}

/// Points of the half-plane `Re z < -1` used for lift checks.
fn half_plane_point() -> impl Strategy<Value = Complex> {
    (-12.0f64..-1.5, -10.0f64..10.0).prop_map(|(x, y)| Complex::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composed_dilatation_stays_in_unit_disk(mu_f in complex_in_disk(0.95), mu_g in complex_in_disk(0.95), phase in -PI..PI) {
        let mu = mu_compose(mu_f, Complex::from_polar(1.0, phase), mu_g).unwrap();
        prop_assert!(mu.norm() < 1.0);
    }

    #[test]
    fn inverse_derivative_forms_agree(fz in nonzero_complex(), k in 0.0f64..0.9, phase in -PI..PI) {
        let fzb = Complex::from_polar(k * fz.norm(), phase);
        let (a, b) = wirtinger_inverse(fz, fzb).unwrap();
        let (c, d) = wirtinger_inverse_via_dilatation(fz, fzb).unwrap();
        prop_assert!((a - c).norm() <= 1e-12 * a.norm());
        prop_assert!((b - d).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn inverse_composed_with_map_is_identity(fz in nonzero_complex(), k in 0.0f64..0.9, phase in -PI..PI) {
        let fzb = Complex::from_polar(k * fz.norm(), phase);
        let inv = wirtinger_inverse(fz, fzb).unwrap();
        let (a, b) = chain_rule(inv, (fz, fzb));
        prop_assert!((a - 1.0).norm() < 1e-12);
        prop_assert!(b.norm() < 1e-12);
    }

    #[test]
    fn radial_power_dilatation_modulus((c, n, m) in radial_params(), z in complex_in_disk(0.9)) {
        prop_assume!(z.norm() > 1e-3);
        let map = PlanarMap::radial_power(c, n, m, 1.0).unwrap();
        let mu = map.dilatation(z).unwrap();
        let want = m.abs() / (2.0 * n as f64 + m);
        prop_assert!((mu.norm() - want).abs() < 1e-12);
    }

    #[test]
    fn lift_is_periodic_and_conjugates_exp((c, n, m) in radial_params(), z in half_plane_point()) {
        let map = PlanarMap::radial_power(c, n, m, 1.0).unwrap();
        let lift = HalfPlaneLift::new(&map).unwrap();
        let w = lift.eval(z).unwrap();
        let shifted = lift.eval(z + Complex::new(0.0, 2.0 * PI)).unwrap();
        prop_assert!((shifted - w - Complex::new(0.0, 2.0 * PI * n as f64)).norm() < 1e-9);
        let target = map.eval(z.exp()).unwrap();
        prop_assert!((w.exp() - target).norm() <= 1e-12 * target.norm());
    }

    #[test]
    fn separable_lift_inverts((c, n, m) in radial_params(), z in half_plane_point()) {
        let rep = AsymptoticRep::radial_power(c, n, m, -40.0, 0.0).unwrap();
        let sep = build_separable(&rep).unwrap();
        let back = sep.inverse(sep.eval(z)).unwrap();
        prop_assert!((back - z).norm() < 1e-9);
    }

    #[test]
    fn lift_newton_inverse_round_trip(eps in 0.0f64..0.1, z in half_plane_point()) {
        let map = PlanarMap::perturbed_radial(Complex::new(1.0, 0.0), 1, 1.0, eps, vec![Complex::new(1.0, 0.0)], 1.0).unwrap();
        let lift = HalfPlaneLift::new(&map).unwrap();
        let w = lift.eval(z).unwrap();
        let back = lift.inverse(w, z + Complex::new(0.01, -0.01)).unwrap();
        prop_assert!((back - z).norm() < 1e-9);
    }

    #[test]
    fn linear_series_mean_radius(a in nonzero_complex(), r in 1e-4f64..1.0) {
        let rho = series_mean_radius(&[a], r).unwrap();
        prop_assert!((rho - a.norm() * r).abs() <= 1e-14 * a.norm() * r);
    }

    #[test]
    fn exponential_fit_dominates_samples(t in 0.01f64..10.0, alpha in 0.3f64..3.0, wobble in 0.0f64..0.5) {
        let samples: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let x = -8.0 + 7.0 * i as f64 / 199.0;
                (x, t * (alpha * x).exp() * (1.0 - wobble * (7.3 * x).sin().abs()))
            })
            .collect();
        let fit = fit_exponential_bound(&samples, Hypothesis::Closeness).unwrap();
        prop_assert!(fit.certified);
        prop_assert!(samples.iter().all(|&(x, y)| y <= fit.bound(x) * (1.0 + 1e-12)));
        prop_assert!((fit.exponent - alpha).abs() < 0.25 * alpha);
    }
}
