//! Simulation laboratory for Euler-Maruyama discretizations of SDEs with the
//! critical drift `-x log(1+|x|)` and polynomial-growth drifts, driven by
//! Brownian, isotropic alpha-stable, or Pareto-surrogate noise.
//!
//! The crate is organized bottom-up:
//!
//! * [`constants`] evaluates the closed-form constants (sphere areas, the
//!   Levy-measure constant, the Pareto scaling `sigma`, `kappa_alpha`,
//!   `delta_alpha`, `K_1`, `K_2`).
//! * [`noise`] holds the exact increment samplers and the reproducible
//!   per-stream RNG.
//! * [`dynamics`] holds drift/diffusion specifications and the EM stepping
//!   kernels with overflow saturation.
//! * [`logspace`] carries magnitudes beyond the `f64` range for blow-up paths.
//! * [`montecarlo`] runs deterministic parallel ensembles and streams moment
//!   estimates.
//! * [`theory`] certifies blow-up regimes, builds the conditioning events and
//!   checks the pathwise growth claims.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dynamics;
pub mod logspace;
pub mod montecarlo;
pub mod noise;
pub mod theory;

mod error;

pub use error::{Error, Result};
