//! Increment samplers and the reproducible stream RNG.
//!
//! Every sampler draws from a caller-owned [`StreamRng`]. A stream is a
//! ChaCha8 keystream selected by `(seed, stream)`; ensembles give path `i`
//! stream `i`, so results do not depend on scheduling or thread count.

use std::f64::consts::PI;

use rand::distr::{Open01, OpenClosed01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::constants::StableParams;
use crate::{Error, Result};

/// Seed plus sub-stream index. Identical values replay identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(self) -> StreamRng {
        StreamRng::new(self.seed, self.stream)
    }
}

/// ChaCha8 generator positioned on one of its 2^64 streams.
#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self(inner)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Derives the seed of cell `index` from a master seed.
///
/// This is the SplitMix64 output function applied to
/// `master + (index + 1) * 0x9E3779B97F4A7C15`, so neighbouring indices map to
/// decorrelated 64-bit seeds and the mapping is stable across releases.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which law drives the increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Brownian increments; alpha is implicitly 2.
    Gaussian,
    /// Rotationally symmetric alpha-stable increments, `alpha in (0, 2)`.
    IsotropicStable(StableParams),
    /// Pareto-surrogate increments with radial tail `P(|Z| >= z) = z^-alpha`.
    Pareto(StableParams),
}

impl NoiseKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseKind::Gaussian => Ok(()),
            NoiseKind::IsotropicStable(p) | NoiseKind::Pareto(p) => p.require_heavy_tailed(),
        }
    }

    /// Stability index, 2 for Gaussian noise.
    pub fn alpha(&self) -> f64 {
        match self {
            NoiseKind::Gaussian => 2.0,
            NoiseKind::IsotropicStable(p) | NoiseKind::Pareto(p) => p.alpha,
        }
    }
}

/// Radius interval `[lo, hi]` with `lo >= 1`; `hi` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusWindow {
    pub lo: f64,
    pub hi: f64,
}

impl RadiusWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 1.0) || !lo.is_finite() || !(hi > lo) {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, +inf)`.
    pub fn tail(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY)
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r <= self.hi
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::ZeroDimension)
    } else {
        Ok(())
    }
}

pub fn fill_gaussian<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
}

/// Vector of `d` independent standard normal components.
pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<Vec<f64>> {
    check_dim(d)?;
    let mut out = vec![0.0; d];
    fill_gaussian(rng, &mut out);
    Ok(out)
}

/// Uniform direction on the unit sphere: a random sign for `d = 1`, a
/// normalized Gaussian vector otherwise.
pub fn fill_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        fill_gaussian(rng, out);
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

/// Pareto radius by inverse CDF, `R = U^{-1/alpha}` with `U` in `(0, 1]`.
pub fn pareto_radius<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let u: f64 = rng.sample(OpenClosed01);
    u.powf(-1.0 / alpha)
}

pub fn fill_pareto<R: Rng + ?Sized>(rng: &mut R, alpha: f64, out: &mut [f64]) {
    let r = pareto_radius(rng, alpha);
    fill_direction(rng, out);
    out.iter_mut().for_each(|x| *x *= r);
}

/// d-dimensional Pareto vector with density `alpha / (s_{d-1} |z|^{alpha+d})`
/// on `|z| > 1`.
pub fn sample_pareto_vector<R: Rng + ?Sized>(rng: &mut R, p: StableParams) -> Result<Vec<f64>> {
    p.require_heavy_tailed()?;
    let mut out = vec![0.0; p.d];
    fill_pareto(rng, p.alpha, &mut out);
    Ok(out)
}

/// Logarithm of a Pareto radius conditioned on `[e^ln_lo, e^ln_hi]`.
///
/// Works entirely in log space, so windows far beyond the `f64` range
/// (thresholds like `e^{n K}`) cost the same as ordinary ones. `ln_hi` may be
/// `+inf`.
pub fn conditioned_ln_radius<R: Rng + ?Sized>(rng: &mut R, alpha: f64, ln_lo: f64, ln_hi: f64) -> f64 {
    let u: f64 = rng.random();
    // R^-alpha = (1-u) lo^-alpha + u hi^-alpha, factored by lo^-alpha
    let ratio = (-alpha * (ln_hi - ln_lo)).exp();
    ln_lo - ((1.0 - u) + u * ratio).ln() / alpha
}

/// Pareto vector conditioned on `|Z| in [w.lo, w.hi]`, by the exact inverse
/// CDF of the truncated radius (no rejection).
pub fn sample_pareto_conditioned<R: Rng + ?Sized>(rng: &mut R, p: StableParams, w: RadiusWindow) -> Result<Vec<f64>> {
    p.require_heavy_tailed()?;
    let mut out = vec![0.0; p.d];
    fill_pareto_conditioned(rng, p.alpha, w, &mut out);
    Ok(out)
}

pub fn fill_pareto_conditioned<R: Rng + ?Sized>(rng: &mut R, alpha: f64, w: RadiusWindow, out: &mut [f64]) {
    let ln_r = conditioned_ln_radius(rng, alpha, w.lo.ln(), w.hi.ln());
    let r = ln_r.exp().clamp(w.lo, w.hi);
    fill_direction(rng, out);
    out.iter_mut().for_each(|x| *x *= r);
}

/// Exact mass `w.lo^-alpha - w.hi^-alpha` of a radius window.
pub fn window_probability(p: StableParams, w: RadiusWindow) -> Result<f64> {
    p.require_heavy_tailed()?;
    RadiusWindow::new(w.lo, w.hi)?;
    let upper = if w.hi.is_infinite() { 0.0 } else { w.hi.powf(-p.alpha) };
    Ok(w.lo.powf(-p.alpha) - upper)
}

/// Symmetric standard stable variate with characteristic function
/// `exp(-|xi|^alpha)` by the Chambers-Mallows-Stuck transform.
pub fn cms_symmetric<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v = PI * (u - 0.5);
    let w: f64 = rng.sample(Exp1);
    if alpha == 1.0 {
        return v.tan();
    }
    let first = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let second = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    first * second
}

/// Positive stable variate with Laplace transform `exp(-lambda^a)`,
/// `a in (0, 1)`, by Kanter's representation.
pub fn positive_stable<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    let u = PI * u;
    let w: f64 = rng.sample(Exp1);
    let first = (a * u).sin() / u.sin().powf(1.0 / a);
    let second = (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a);
    first * second
}

/// One increment over time `t` of the isotropic stable process normalized by
/// `E exp(i <xi, Z_t>) = exp(-t |xi|^alpha)`.
///
/// For `d >= 2` the increment is `t^{1/alpha} sqrt(2 S) G` with `G` standard
/// normal and `S` positive `(alpha/2)`-stable with `E e^{-lambda S} =
/// e^{-lambda^{alpha/2}}`. Then `E exp(i <xi, Z>) = E exp(-S |xi|^2) =
/// exp(-|xi|^alpha)` at `t = 1`.
pub fn fill_stable<R: Rng + ?Sized>(rng: &mut R, alpha: f64, t: f64, out: &mut [f64]) {
    let scale = t.powf(1.0 / alpha);
    if out.len() == 1 {
        out[0] = scale * cms_symmetric(rng, alpha);
        return;
    }
    let s = positive_stable(rng, alpha / 2.0);
    let mix = scale * (2.0 * s).sqrt();
    fill_gaussian(rng, out);
    out.iter_mut().for_each(|x| *x *= mix);
}

pub fn sample_isotropic_stable<R: Rng + ?Sized>(rng: &mut R, p: StableParams, t: f64) -> Result<Vec<f64>> {
    p.require_heavy_tailed()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "increment time must be positive and finite",
        });
    }
    let mut out = vec![0.0; p.d];
    fill_stable(rng, p.alpha, t, &mut out);
    Ok(out)
}

/// Subordinated sampler used for every dimension, including `d = 1`.
/// Exposed for cross-checking against [`cms_symmetric`].
pub fn fill_stable_subordinated<R: Rng + ?Sized>(rng: &mut R, alpha: f64, t: f64, out: &mut [f64]) {
    let s = positive_stable(rng, alpha / 2.0);
    let mix = t.powf(1.0 / alpha) * (2.0 * s).sqrt();
    fill_gaussian(rng, out);
    out.iter_mut().for_each(|x| *x *= mix);
}
