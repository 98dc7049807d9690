//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use num_complex::Complex64 as Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrlin::estimates::Mode;
use qrlin::lift::HalfPlaneLift;
use qrlin::maps::{mu_compose, rotation_factor, wirtinger_inverse, PlanarMap};
use qrlin::oracles::{compare_full, RadialConjugacy, RadialMode};
use qrlin::pipeline::{self, Linearization, Settings};
use qrlin::radial::mean_radius;
use qrlin::spec::SpecFile;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn spec(name: &str) -> SpecFile {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "specs", &format!("{name}.json")].iter().collect();
    SpecFile::from_path(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Default-settings run of a bundled spec, computed once per process.
fn run(name: &str) -> Result<Arc<Linearization>, String> {
    static RUNS: OnceLock<Mutex<HashMap<String, Arc<Linearization>>>> = OnceLock::new();
    let runs = RUNS.get_or_init(Default::default);
    if let Some(lin) = runs.lock().unwrap().get(name) {
        return Ok(lin.clone());
    }
    let lin = pipeline::linearize(&spec(name), &Settings::default()).map_err(|e| format!("{name}: {e}"))?;
    let lin = Arc::new(lin);
    runs.lock().unwrap().insert(name.to_string(), lin.clone());
    Ok(lin)
}

fn residual(lin: &Linearization) -> f64 {
    lin.result.residual.unwrap_or(f64::INFINITY)
}

fn exact_identity() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["z_abs_z", "square_root_spiral", "scaled_radial"] {
        let lin = run(name)?;
        let res = residual(&lin);
        let hist = lin.result.error_history.iter().copied().fold(0.0, f64::max);
        let id = lin
            .probe_disk()
            .iter()
            .map(|&z| lin.result.psi(z).map(|w| (w - z).norm() / z.norm()))
            .collect::<qrlin::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?
            .into_iter()
            .fold(0.0, f64::max);
        ok &= lin.exit_code == 0 && res < 1e-10 && hist < 1e-10 && id < 1e-10;
        notes.push(format!("{name} [{}] res {res:.1e} |psi-id| {id:.1e}", lin.setup.mode.as_str()));
    }
    Ok((ok, notes.join("; ")))
}

fn koenigs_orbit(z: Complex) -> Complex {
    let f = |w: Complex| 0.5 * w + 0.1 * w * w;
    let mut w = z;
    let mut scale = 1.0;
    for _ in 0..200 {
        w = f(w);
        scale *= 2.0;
    }
    w * scale
}

fn koenigs_inverse_orbit(z: Complex) -> Complex {
    // root of 0.3 z^2 + 2 z = w through 0, written without cancellation
    let g = |w: Complex| 2.0 * w / (2.0 + (4.0 + 1.2 * w).sqrt());
    let mut w = z;
    let mut scale = 1.0;
    for _ in 0..200 {
        w = g(w);
        scale *= 2.0;
    }
    w * scale
}

fn boettcher_product(z: Complex) -> Complex {
    // f(w) = w^2 (1 + 0.1 w), so log phi = log z + sum 2^{-(k+1)} log(1 + 0.1 f^k)
    let mut w = z;
    let mut log_phi = z.ln();
    let mut weight = 0.5;
    for _ in 0..60 {
        log_phi += weight * (1.0 + 0.1 * w).ln();
        w = w * w * (1.0 + 0.1 * w);
        weight *= 0.5;
        if w.norm() < 1e-300 {
            break;
        }
    }
    log_phi.exp()
}

fn oracle_discrepancy(lin: &Linearization, mode: RadialMode, phi: fn(Complex) -> Complex) -> Result<f64, String> {
    let h = RadialConjugacy::new(lin.setup.profile.clone(), mode).map_err(|e| e.to_string())?;
    compare_full(|z| lin.result.psi(z), |z| Ok(phi(z)), &h, &lin.probe_disk()).map_err(|e| e.to_string())
}

fn koenigs_recovery() -> Outcome {
    let lin = run("koenigs_attracting")?;
    let res = residual(&lin);
    let cmp = oracle_discrepancy(&lin, RadialMode::Koenigs, koenigs_orbit)?;
    Ok((lin.exit_code == 0 && res < 1e-6 && cmp < 1e-4, format!("residual {res:.2e}, oracle {cmp:.2e}")))
}

fn boettcher_recovery() -> Outcome {
    let lin = run("boettcher")?;
    let res = residual(&lin);
    let cmp = oracle_discrepancy(&lin, RadialMode::Boettcher, boettcher_product)?;
    Ok((lin.exit_code == 0 && res < 1e-6 && cmp < 1e-4, format!("residual {res:.2e}, oracle {cmp:.2e}")))
}

fn repelling_recovery() -> Outcome {
    let lin = run("koenigs_repelling")?;
    let res = residual(&lin);
    let cmp = oracle_discrepancy(&lin, RadialMode::Koenigs, koenigs_inverse_orbit)?;
    let ok = lin.setup.mode == Mode::Repelling && lin.result.converged && res < 1e-6 && cmp < 1e-3;
    Ok((ok, format!("k {} residual {res:.2e}, oracle {cmp:.2e}", lin.result.k_used())))
}

fn perturbation() -> Outcome {
    let lin = run("perturbed")?;
    let report = lin.report.as_ref().ok_or("no hypothesis report")?;
    let res = residual(&lin);
    let (_, nu_fit) = lin.result.mu_decay.ok_or("no dilatation fit")?;
    let ok = report.certified && (report.alpha - 1.0).abs() <= 0.2 && res < 1e-5 && nu_fit > 0.0;
    Ok((ok, format!("alpha {:.3}, residual {res:.2e}, nu_fit {nu_fit:.3}", report.alpha)))
}

fn bound_suite() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["koenigs_attracting", "koenigs_repelling", "perturbed", "boettcher"] {
        let lin = run(name)?;
        let r = &lin.result;
        let worst = r.cauchy_ratios.iter().skip(1).copied().fold(0.0, f64::max);
        ok &= r.lemma_check && r.bound_check && r.ratio_check;
        notes.push(format!("{name} ratio {worst:.3}/{:.3}", r.bounds.contraction() + 0.1));
    }
    Ok((ok, notes.join("; ")))
}

fn bip_values() -> Outcome {
    let mut worst = 0.0f64;
    for d in 1..=3usize {
        let mut coeffs = vec![c(0.0, 0.0); d];
        coeffs[d - 1] = c(1.0, 0.0);
        let map = PlanarMap::holomorphic(coeffs, 1.0).map_err(|e| e.to_string())?;
        let lift = HalfPlaneLift::new(&map).map_err(|e| e.to_string())?;
        let want = 2.0 * PI * (d * d) as f64;
        for t in [-1.0, -3.0, -7.0] {
            let e = lift.bip_integral(t).map_err(|e| e.to_string())?;
            worst = worst.max((e - want).abs() / want);
        }
    }
    Ok((worst < 1e-8, format!("max relative error {worst:.2e}")))
}

fn mean_radius_oracle() -> Outcome {
    let coeffs = [c(1.0, 0.0), c(1.0, 0.0)];
    let map = PlanarMap::holomorphic(coeffs.to_vec(), 1.0).map_err(|e| e.to_string())?;
    let mut series_err = 0.0f64;
    for r in [0.3f64, 0.1, 0.01] {
        let want: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| (k + 1) as f64 * a.norm_sqr() * r.powi(2 * (k as i32 + 1)))
            .sum::<f64>()
            .sqrt();
        let got = mean_radius(&map, r).map_err(|e| e.to_string())?;
        series_err = series_err.max((got - want).abs() / want);
    }
    let mut power_err = 0.0f64;
    for (cc, n, m) in [(c(1.0, 0.0), 1, 1.0), (c(1.0, 0.0), 2, -1.5), (c(0.0, 2.0), 1, 0.5), (c(0.3, 0.4), 3, 0.25)] {
        let map = PlanarMap::radial_power(cc, n, m, 1.0).map_err(|e| e.to_string())?;
        for r in [0.5f64, 0.1, 1e-3] {
            let want = cc.norm() * r.powf(n as f64 + m);
            let got = mean_radius(&map, r).map_err(|e| e.to_string())?;
            power_err = power_err.max((got - want).abs() / want);
        }
    }
    Ok((series_err < 1e-6 && power_err < 1e-8, format!("series {series_err:.2e}, radial power {power_err:.2e}")))
}

fn central_wirtinger<F: Fn(Complex) -> Complex>(f: F, z: Complex, h: f64) -> (Complex, Complex) {
    let dx = (f(z + h) - f(z - h)) / (2.0 * h);
    let dy = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
    let i = c(0.0, 1.0);
    (0.5 * (dx - i * dy), 0.5 * (dx + i * dy))
}

/// Newton inversion with a finite-difference real Jacobian.
fn invert<F: Fn(Complex) -> Complex>(f: &F, w: Complex, guess: Complex) -> Complex {
    let mut z = guess;
    for _ in 0..60 {
        let r = f(z) - w;
        if r.norm() < 1e-15 * w.norm() {
            break;
        }
        let (a, b) = central_wirtinger(f, z, 1e-7 * z.norm());
        let jac = a.norm_sqr() - b.norm_sqr();
        z -= (a.conj() * r - b * r.conj()) / jac;
    }
    z
}

fn calculus_identities() -> Outcome {
    let z_abs_z = |z: Complex| z * z.norm();
    let perturbed = |z: Complex| z * z.norm() * (1.0 + 0.05 * z);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut comp_err = 0.0f64;
    let mut inv_err = 0.0f64;
    for _ in 0..100 {
        let z = Complex::from_polar(rng.random_range(0.05..0.5), rng.random_range(-PI..PI));
        let h = 1e-5 * z.norm();
        // composition z|z| after the perturbed map
        let (fz, fzb) = central_wirtinger(perturbed, z, h);
        let w = perturbed(z);
        let (gz, gzb) = central_wirtinger(z_abs_z, w, 1e-5 * w.norm());
        let predicted = mu_compose(fzb / fz, rotation_factor(fz), gzb / gz).map_err(|e| e.to_string())?;
        let (cz, czb) = central_wirtinger(|u| z_abs_z(perturbed(u)), z, h);
        comp_err = comp_err.max((predicted - czb / cz).norm());
        // derivatives of the inverse at f(z)
        let (iz, izb) = wirtinger_inverse(fz, fzb).map_err(|e| e.to_string())?;
        let g = |u: Complex| invert(&perturbed, u, z);
        let (nz, nzb) = central_wirtinger(g, w, 1e-5 * w.norm());
        inv_err = inv_err.max((iz - nz).norm().max((izb - nzb).norm()) / iz.norm());
    }
    let mut mu_err = 0.0f64;
    for (n, m, want) in [(1u32, 1.0, 1.0 / 3.0), (2, -1.5, 3.0 / 5.0)] {
        let map = PlanarMap::radial_power(c(1.0, 0.0), n, m, 1.0).map_err(|e| e.to_string())?;
        for j in 0..64 {
            let z = Complex::from_polar(0.3, -PI + 2.0 * PI * (j as f64 + 0.5) / 64.0);
            let (a, b) = map.wirtinger_fd(z).map_err(|e| e.to_string())?;
            mu_err = mu_err.max(((b / a).norm() - want).abs());
        }
    }
    let ok = comp_err < 1e-5 && inv_err < 1e-5 && mu_err < 1e-6;
    Ok((ok, format!("composition {comp_err:.1e}, inverse {inv_err:.1e}, |mu| {mu_err:.1e}")))
}

fn structural_invariants() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for name in ["z_abs_z", "square_root_spiral", "koenigs_attracting", "koenigs_repelling", "boettcher", "perturbed"] {
        let lin = run(name)?;
        for check in pipeline::invariant_checks(&lin) {
            if check.limit != 1e-9 {
                return Err(format!("{}: unexpected limit {}", check.name, check.limit));
            }
            worst = worst.max(check.value);
            if !check.passed {
                ok = false;
                failed.push(format!("{name}/{}", check.name));
            }
        }
    }
    let detail = if failed.is_empty() { format!("worst {worst:.1e}") } else { format!("failed {}", failed.join(", ")) };
    Ok((ok, detail))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact representative gives identity", exact_identity),
        ("Koenigs recovery", koenigs_recovery),
        ("Boettcher recovery", boettcher_recovery),
        ("repelling recovery", repelling_recovery),
        ("quasiregular perturbation", perturbation),
        ("error bound suite", bound_suite),
        ("BIP energy of z^d", bip_values),
        ("mean radius oracle", mean_radius_oracle),
        ("calculus identities", calculus_identities),
        ("structural invariants", structural_invariants),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name:<36} {detail} ({:.1}s)", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
