//! Numerical linearization of planar quasiregular maps near a fixed point.
//!
//! A map `f` with `f(0) = 0` is compared against its asymptotic representative
//! `D(z) = rho_f(|z|) g(z/|z|)`, and a conjugacy `psi` with `psi∘f = D∘psi` is
//! built by iterating in logarithmic coordinates, where `f` lifts to a map
//! `f̃` of a left half-plane with `exp∘f̃ = f∘exp`.
//!
//! The crate is organized bottom-up:
//!
//! - [`maps`]: map families, Wirtinger calculus, index and classification
//! - [`radial`]: mean radius `rho_f` by area quadrature and its log transform
//! - [`infinitesimal`]: rescalings, the circle map `g`, and `D`
//! - [`lift`]: half-plane lifts `f̃`, the separable `D̃`, inverses, BIP energy
//! - [`estimates`]: fitted hypothesis constants and the multiplier threshold
//! - [`conjugacy`]: the iteration, descent to the disk, and residual checks
//! - [`oracles`]: Königs, Böttcher and radial Sternberg coordinates
//! - [`pipeline`]: the analyze / linearize / verify drivers behind the CLI

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjugacy;
pub mod error;
pub mod estimates;
pub mod infinitesimal;
pub mod interp;
pub mod lift;
pub mod maps;
pub mod oracles;
pub mod par;
pub mod pipeline;
pub mod quad;
pub mod radial;
pub mod spec;

pub type Complex = num_complex::Complex64;

pub use error::{Error, Hypothesis, Result};
pub use maps::{FixedPointClass, FixedPointTag, PlanarMap};
