//! Browser bindings. Every entry point takes a spec as JSON text and returns
//! JSON text; errors come back as `{"error": ..., "exit_code": ...}`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qrlin::pipeline::{self, exit_code, ModeChoice, Settings};
use qrlin::spec::SpecFile;
use qrlin::{Complex, Error};

#[derive(Serialize)]
struct Failure {
    error: String,
    exit_code: i32,
}

fn respond<T: Serialize>(result: Result<T, Error>) -> String {
    let text = match result {
        Ok(v) => serde_json::to_string(&v),
        Err(e) => serde_json::to_string(&Failure { exit_code: exit_code(&e), error: e.to_string() }),
    };
    text.unwrap_or_else(|e| format!("{{\"error\":\"{e}\",\"exit_code\":3}}"))
}

fn mode_choice(mode: &str) -> ModeChoice {
    match mode {
        "attracting" => ModeChoice::Attracting,
        "repelling" => ModeChoice::Repelling,
        _ => ModeChoice::Auto,
    }
}

/// Fixed-point class, degree, simplicity, `L` and BIP energies.
#[wasm_bindgen]
pub fn analyze(spec_json: &str) -> String {
    respond(SpecFile::parse(spec_json).and_then(|spec| pipeline::analyze(&spec, &Settings::default())))
}

#[derive(Serialize)]
struct Curve {
    radius: f64,
    z: Vec<[f64; 2]>,
    psi: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct LinearizeOutput {
    summary: pipeline::LinearizeSummary,
    curves: Vec<Curve>,
}

fn circle_images(lin: &pipeline::Linearization, rings: usize, samples: usize) -> Result<Vec<Curve>, Error> {
    let outer = 0.8 * lin.setup.window.t_hi.exp();
    let mut curves = Vec::with_capacity(rings);
    for j in 0..rings {
        let radius = outer * (j + 1) as f64 / rings as f64;
        let mut z = Vec::with_capacity(samples + 1);
        let mut psi = Vec::with_capacity(samples + 1);
        for s in 0..=samples {
            let p = Complex::from_polar(radius, std::f64::consts::TAU * s as f64 / samples as f64);
            let w = lin.result.psi(p)?;
            z.push([p.re, p.im]);
            psi.push([w.re, w.im]);
        }
        curves.push(Curve { radius, z, psi });
    }
    Ok(curves)
}

/// Builds the conjugacy and returns its summary plus the images under `ψ` of
/// `rings` concentric circles.
#[wasm_bindgen]
pub fn linearize(spec_json: &str, mode: &str, k_max: usize, rings: usize) -> String {
    let settings = Settings { mode: mode_choice(mode), k_max: k_max.max(1), grid: 17, ..Settings::default() };
    respond(SpecFile::parse(spec_json).and_then(|spec| {
        let lin = pipeline::linearize(&spec, &settings)?;
        let curves = circle_images(&lin, rings.clamp(1, 16), 256)?;
        Ok(LinearizeOutput { summary: lin.summary(), curves })
    }))
}

#[derive(Serialize)]
struct DilatationSample {
    theta: f64,
    re_mu: f64,
    im_mu: f64,
    abs_mu: f64,
}

/// Complex dilatation of the map on the circle `|z| = radius`.
#[wasm_bindgen]
pub fn dilatation_circle(spec_json: &str, radius: f64, samples: usize) -> String {
    respond(SpecFile::parse(spec_json).and_then(|spec| {
        let map = spec.map.build()?;
        (0..samples.clamp(8, 4096))
            .map(|j| {
                let theta = -std::f64::consts::PI + std::f64::consts::TAU * (j as f64 + 0.5) / samples as f64;
                let mu = map.dilatation(Complex::from_polar(radius, theta))?;
                Ok(DilatationSample { theta, re_mu: mu.re, im_mu: mu.im, abs_mu: mu.norm() })
            })
            .collect::<Result<Vec<_>, Error>>()
    }))
}
