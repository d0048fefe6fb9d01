//! Drift and diffusion library and the Euler-Maruyama stepping kernels.
//!
//! Every drift is radial, `f(x) = x * phi(|x|)`, with `phi` a finite sum of
//! terms `c |x|^p log(1+|x|)^q`. Keeping drifts in this form lets
//! [`check_assumption_a`] compare growth exponents symbolically and lets the
//! log-space kernel evaluate `phi` for magnitudes beyond `f64`.

use crate::logspace::{ln_1p_from_ln, stable_norm, LogVector, SignedLog};
use crate::noise::StreamRng;
use crate::{Error, Result};

/// One term `coeff * |x|^power * log(1+|x|)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialTerm {
    pub coeff: f64,
    pub power: f64,
    pub log_power: u32,
}

impl RadialTerm {
    pub fn new(coeff: f64, power: f64, log_power: u32) -> Self {
        Self { coeff, power, log_power }
    }

    fn eval(&self, r: f64) -> f64 {
        let mut v = self.coeff;
        if self.power != 0.0 {
            v *= r.powf(self.power);
        }
        if self.log_power != 0 {
            v *= r.ln_1p().powi(self.log_power as i32);
        }
        v
    }

    fn eval_log(&self, ln_r: f64) -> SignedLog {
        let mut ln_abs = self.coeff.abs().ln();
        if self.power != 0.0 {
            ln_abs += self.power * ln_r;
        }
        if self.log_power != 0 {
            ln_abs += self.log_power as f64 * ln_1p_from_ln(ln_r).ln();
        }
        SignedLog::from_ln(self.coeff.signum(), ln_abs)
    }
}

fn validate_terms(terms: &[RadialTerm], what: &'static str) -> Result<()> {
    for t in terms {
        if !t.coeff.is_finite() || !t.power.is_finite() || t.power < 0.0 {
            return Err(Error::InvalidParameter {
                name: what,
                value: t.power,
                reason: "terms need finite coefficients and non-negative finite powers",
            });
        }
    }
    Ok(())
}

fn sum_terms(terms: &[RadialTerm], r: f64) -> f64 {
    terms.iter().map(|t| t.eval(r)).sum()
}

fn sum_terms_log(terms: &[RadialTerm], ln_r: f64) -> SignedLog {
    terms.iter().fold(SignedLog::ZERO, |acc, t| acc + t.eval_log(ln_r))
}

/// Asymptotic size `c r^p log(r)^q` of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
struct GrowthOrder {
    power: f64,
    log_power: u32,
    coeff: f64,
}

impl GrowthOrder {
    fn key(&self) -> (f64, u32, f64) {
        (self.power, self.log_power, self.coeff)
    }

    fn larger(a: Self, b: Self) -> bool {
        a.key().partial_cmp(&b.key()) != Some(std::cmp::Ordering::Less)
    }
}

/// Leading order of `|sum of terms|`, after merging terms of equal order.
fn leading_order(terms: &[RadialTerm]) -> Option<GrowthOrder> {
    let mut merged: Vec<RadialTerm> = Vec::new();
    for t in terms {
        match merged.iter_mut().find(|m| m.power == t.power && m.log_power == t.log_power) {
            Some(m) => m.coeff += t.coeff,
            None => merged.push(*t),
        }
    }
    merged
        .into_iter()
        .filter(|t| t.coeff != 0.0)
        .map(|t| GrowthOrder { power: t.power, log_power: t.log_power, coeff: t.coeff.abs() })
        .reduce(|a, b| if (a.power, a.log_power) >= (b.power, b.log_power) { a } else { b })
}

/// Drift `f(x) = x * phi(|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    /// `f(x) = -x log(1+|x|)`.
    CriticalLog,
    /// `f(x) = -x |x|^theta`, `theta > 0`.
    PowerLaw { theta: f64 },
    /// `f(x) = -x`.
    Linear,
    /// `f(x) = x * sum(terms)`.
    Custom(Vec<RadialTerm>),
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriftSpec::PowerLaw { theta } if !(*theta > 0.0 && theta.is_finite()) => {
                Err(Error::InvalidParameter { name: "theta", value: *theta, reason: "must be positive" })
            }
            DriftSpec::Custom(terms) => validate_terms(terms, "drift term"),
            _ => Ok(()),
        }
    }

    /// The radial profile as explicit terms.
    pub fn terms(&self) -> Vec<RadialTerm> {
        match self {
            DriftSpec::CriticalLog => vec![RadialTerm::new(-1.0, 0.0, 1)],
            DriftSpec::PowerLaw { theta } => vec![RadialTerm::new(-1.0, *theta, 0)],
            DriftSpec::Linear => vec![RadialTerm::new(-1.0, 0.0, 0)],
            DriftSpec::Custom(terms) => terms.clone(),
        }
    }

    /// `phi(r)` such that `f(x) = x phi(|x|)`.
    pub fn radial_factor(&self, r: f64) -> f64 {
        match self {
            DriftSpec::CriticalLog => -r.ln_1p(),
            DriftSpec::PowerLaw { theta } => -r.powf(*theta),
            DriftSpec::Linear => -1.0,
            DriftSpec::Custom(terms) => sum_terms(terms, r),
        }
    }

    pub fn radial_factor_log(&self, ln_r: f64) -> SignedLog {
        sum_terms_log(&self.terms(), ln_r)
    }

    /// `|f(x)|` at `|x| = r`.
    pub fn magnitude(&self, r: f64) -> f64 {
        r * self.radial_factor(r).abs()
    }

    fn growth(&self) -> Option<GrowthOrder> {
        leading_order(&self.terms()).map(|o| GrowthOrder { power: o.power + 1.0, ..o })
    }
}

/// Evaluates `f(x)`.
pub fn drift_eval(spec: &DriftSpec, x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("drift_eval"));
    }
    let phi = spec.radial_factor(stable_norm(x));
    Ok(x.iter().map(|v| v * phi).collect())
}

/// Diffusion coefficient `g(x)`, a `d x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionSpec {
    Identity,
    /// `g(x) = c I`.
    Scalar(f64),
    /// `g(x) = psi(|x|) I` with `psi = sum(terms)`.
    Radial(Vec<RadialTerm>),
    /// Constant row-major `dim x dim` matrix.
    Matrix {
        dim: usize,
        entries: Vec<f64>,
    },
}

impl DiffusionSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            DiffusionSpec::Scalar(c) if !c.is_finite() => Err(Error::NonFinite("diffusion scalar")),
            DiffusionSpec::Radial(terms) => validate_terms(terms, "diffusion term"),
            DiffusionSpec::Matrix { dim, entries } => {
                if *dim != d {
                    return Err(Error::DimensionMismatch { expected: d, got: *dim });
                }
                if entries.len() != dim * dim {
                    return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
                }
                if entries.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("diffusion matrix"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Scalar profile `psi(r)` for isotropic diffusions.
    pub fn isotropic_factor(&self, r: f64) -> Option<f64> {
        match self {
            DiffusionSpec::Identity => Some(1.0),
            DiffusionSpec::Scalar(c) => Some(*c),
            DiffusionSpec::Radial(terms) => Some(sum_terms(terms, r)),
            DiffusionSpec::Matrix { .. } => None,
        }
    }

    pub fn isotropic_factor_log(&self, ln_r: f64) -> Option<SignedLog> {
        match self {
            DiffusionSpec::Identity => Some(SignedLog::ONE),
            DiffusionSpec::Scalar(c) => Some(SignedLog::from_f64(*c)),
            DiffusionSpec::Radial(terms) => Some(sum_terms_log(terms, ln_r)),
            DiffusionSpec::Matrix { .. } => None,
        }
    }

    /// Operator norm `|g(x)|` at `|x| = r`.
    pub fn magnitude(&self, r: f64) -> f64 {
        match self {
            DiffusionSpec::Matrix { dim, entries } => spectral_norm(*dim, entries),
            other => other.isotropic_factor(r).unwrap_or(0.0).abs(),
        }
    }

    /// Writes `g(x) w` into `out`; `r = |x|`.
    pub fn apply(&self, r: f64, w: &[f64], out: &mut [f64]) {
        match self {
            DiffusionSpec::Identity => out.copy_from_slice(w),
            DiffusionSpec::Matrix { dim, entries } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..*dim).map(|j| entries[i * dim + j] * w[j]).sum();
                }
            }
            other => {
                let psi = other.isotropic_factor(r).unwrap_or(0.0);
                for (o, x) in out.iter_mut().zip(w) {
                    *o = psi * x;
                }
            }
        }
    }

    fn growth(&self) -> Option<GrowthOrder> {
        match self {
            DiffusionSpec::Identity => Some(GrowthOrder { power: 0.0, log_power: 0, coeff: 1.0 }),
            DiffusionSpec::Scalar(c) => (*c != 0.0).then_some(GrowthOrder { power: 0.0, log_power: 0, coeff: c.abs() }),
            DiffusionSpec::Radial(terms) => leading_order(terms),
            DiffusionSpec::Matrix { dim, entries } => {
                let n = spectral_norm(*dim, entries);
                (n != 0.0).then_some(GrowthOrder { power: 0.0, log_power: 0, coeff: n })
            }
        }
    }
}

/// Largest singular value by power iteration on `A^T A`.
fn spectral_norm(dim: usize, a: &[f64]) -> f64 {
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let av: Vec<f64> = (0..dim).map(|i| (0..dim).map(|j| a[i * dim + j] * v[j]).sum()).collect();
        let atav: Vec<f64> = (0..dim).map(|j| (0..dim).map(|i| a[i * dim + j] * av[i]).sum()).collect();
        let n = stable_norm(&atav);
        if n == 0.0 {
            return 0.0;
        }
        v = atav.iter().map(|x| x / n).collect();
        if (n - lambda).abs() <= 1e-15 * n {
            lambda = n;
            break;
        }
        lambda = n;
    }
    lambda.sqrt()
}

/// Growth constants of the polynomial sandwich: for `|x| >= H`,
/// `max(|f|, |g|) >= |x|^gamma / H` and `min(|f|, |g|) <= H |x|^lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionAParams {
    pub gamma: f64,
    pub lambda: f64,
    pub h: f64,
}

impl AssumptionAParams {
    pub fn new(gamma: f64, lambda: f64, h: f64) -> Result<Self> {
        if !(gamma > lambda && lambda > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma/lambda",
                value: gamma,
                reason: "need gamma > lambda > 1",
            });
        }
        if !(h >= 1.0 && h.is_finite()) {
            return Err(Error::InvalidParameter { name: "H", value: h, reason: "need H >= 1" });
        }
        Ok(Self { gamma, lambda, h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssumptionInequality {
    /// `max(|f|, |g|) >= |x|^gamma / H`.
    LowerGrowth,
    /// `min(|f|, |g|) <= H |x|^lambda`.
    UpperGrowth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionViolation {
    pub point: Vec<f64>,
    pub radius: f64,
    pub drift_norm: f64,
    pub diffusion_norm: f64,
    pub inequality: AssumptionInequality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub holds: bool,
    /// Probe violations in probe order.
    pub violations: Vec<AssumptionViolation>,
    /// Exponent comparison of the leading terms.
    pub asymptotic_holds: bool,
}

impl AssumptionReport {
    pub fn first_violation(&self) -> Option<&AssumptionViolation> {
        self.violations.first()
    }
}

fn probe_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            dirs.push(e);
        }
    }
    if d > 1 {
        // fixed stream so reports are reproducible
        let mut rng = StreamRng::new(0x5eed_a55e, 0);
        for _ in 0..8 {
            let mut u = vec![0.0; d];
            crate::noise::fill_direction(&mut rng, &mut u);
            dirs.push(u);
        }
    }
    dirs
}

/// Relative slack for rounding in the probe norms.
const PROBE_RTOL: f64 = 1e-12;

/// Checks the polynomial sandwich at points on spheres of the given radii,
/// then compares leading growth exponents symbolically.
pub fn check_assumption_a(
    drift: &DriftSpec,
    diffusion: &DiffusionSpec,
    params: AssumptionAParams,
    d: usize,
    probe_radii: &[f64],
) -> Result<AssumptionReport> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    drift.validate()?;
    diffusion.validate(d)?;
    if let Some(&r) = probe_radii.iter().find(|&&r| !(r >= params.h)) {
        return Err(Error::InvalidParameter { name: "probe radius", value: r, reason: "probe radii must be >= H" });
    }
    let dirs = probe_directions(d);
    let mut violations = Vec::new();
    for &r in probe_radii {
        for u in &dirs {
            let x: Vec<f64> = u.iter().map(|c| c * r).collect();
            let fx = drift_eval(drift, &x)?;
            let f_norm = stable_norm(&fx);
            let rx = stable_norm(&x);
            let g_norm = diffusion.magnitude(rx);
            let hi = f_norm.max(g_norm);
            let lo = f_norm.min(g_norm);
            let mut push = |inequality| {
                violations.push(AssumptionViolation {
                    point: x.clone(),
                    radius: rx,
                    drift_norm: f_norm,
                    diffusion_norm: g_norm,
                    inequality,
                })
            };
            if hi < rx.powf(params.gamma) / params.h * (1.0 - PROBE_RTOL) {
                push(AssumptionInequality::LowerGrowth);
            }
            if lo > params.h * rx.powf(params.lambda) * (1.0 + PROBE_RTOL) {
                push(AssumptionInequality::UpperGrowth);
            }
        }
    }

    let asymptotic_holds = asymptotic_sandwich(drift.growth(), diffusion.growth(), params);
    Ok(AssumptionReport { holds: violations.is_empty() && asymptotic_holds, violations, asymptotic_holds })
}

fn asymptotic_sandwich(f: Option<GrowthOrder>, g: Option<GrowthOrder>, p: AssumptionAParams) -> bool {
    let (big, small) = match (f, g) {
        (Some(a), Some(b)) => {
            if GrowthOrder::larger(a, b) {
                (Some(a), Some(b))
            } else {
                (Some(b), Some(a))
            }
        }
        (Some(a), None) | (None, Some(a)) => (Some(a), None),
        (None, None) => (None, None),
    };
    let lower_ok = match big {
        None => false,
        Some(o) => o.power > p.gamma || (o.power == p.gamma && (o.log_power > 0 || o.coeff >= 1.0 / p.h)),
    };
    let upper_ok = match small {
        None => true,
        Some(o) => o.power < p.lambda || (o.power == p.lambda && o.log_power == 0 && o.coeff <= p.h),
    };
    lower_ok && upper_ok
}

/// Horizon, step count, initial point and seed. The step size is always
/// derived as `T / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub horizon: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    pub seed: u64,
}

impl EmConfig {
    pub fn new(horizon: f64, steps: usize, x0: Vec<f64>, seed: u64) -> Result<Self> {
        let cfg = Self { horizon, steps, x0, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: self.horizon,
                reason: "must be positive and finite",
            });
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter { name: "steps", value: 0.0, reason: "must be >= 1" });
        }
        if self.x0.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x0"));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

/// State `Y_k` of one path. Once saturated, `y` stays at `+inf` and only `k`
/// advances.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub y: Vec<f64>,
    pub k: usize,
    pub overflowed: bool,
    pub overflow_step: Option<usize>,
}

impl PathState {
    pub fn new(x0: Vec<f64>) -> Self {
        Self { y: x0, k: 0, overflowed: false, overflow_step: None }
    }

    /// `|Y_k|`, `+inf` once saturated.
    pub fn magnitude(&self) -> f64 {
        if self.overflowed {
            f64::INFINITY
        } else {
            stable_norm(&self.y)
        }
    }

    fn saturate(&mut self) {
        self.overflowed = true;
        self.overflow_step = Some(self.k);
        self.y.iter_mut().for_each(|v| *v = f64::INFINITY);
    }
}

/// Scale `eta^{1/alpha} / sigma` applied to Pareto-surrogate noise.
pub fn surrogate_scale(eta: f64, alpha: f64, sigma: f64) -> f64 {
    eta.powf(1.0 / alpha) / sigma
}

/// Shared update `y <- y + eta * (y * phi) + g(y) inc` followed by the
/// saturation check.
fn advance(state: &mut PathState, eta: f64, drift: &DriftSpec, diffusion: &DiffusionSpec, inc: &[f64]) {
    state.k += 1;
    if state.overflowed {
        return;
    }
    let r = stable_norm(&state.y);
    let phi = drift.radial_factor(r);
    match diffusion {
        DiffusionSpec::Identity => {
            for (y, w) in state.y.iter_mut().zip(inc) {
                *y = *y + eta * (*y * phi) + w;
            }
        }
        DiffusionSpec::Matrix { .. } => {
            let mut gw = vec![0.0; inc.len()];
            diffusion.apply(r, inc, &mut gw);
            for (y, w) in state.y.iter_mut().zip(&gw) {
                *y = *y + eta * (*y * phi) + w;
            }
        }
        other => {
            let psi = other.isotropic_factor(r).unwrap_or(0.0);
            for (y, w) in state.y.iter_mut().zip(inc) {
                *y = *y + eta * (*y * phi) + psi * w;
            }
        }
    }
    if state.y.iter().any(|v| !v.is_finite()) {
        state.saturate();
    }
}

/// Brownian critical kernel: `Y + eta f(Y) + sqrt(eta) N`, `N` standard normal.
pub fn em_step_brownian_critical(mut state: PathState, eta: f64, normal: &[f64]) -> PathState {
    let s = eta.sqrt();
    let inc: Vec<f64> = normal.iter().map(|n| s * n).collect();
    advance(&mut state, eta, &DriftSpec::CriticalLog, &DiffusionSpec::Identity, &inc);
    state
}

/// Stable critical kernel with a raw increment `L_{(k+1) eta} - L_{k eta}`.
pub fn em_step_stable_critical(mut state: PathState, eta: f64, increment: &[f64]) -> PathState {
    advance(&mut state, eta, &DriftSpec::CriticalLog, &DiffusionSpec::Identity, increment);
    state
}

/// Pareto-surrogate critical kernel: the noise is `eta^{1/alpha} Z / sigma`.
pub fn em_step_pareto_critical(mut state: PathState, eta: f64, alpha: f64, sigma: f64, z: &[f64]) -> PathState {
    let s = surrogate_scale(eta, alpha, sigma);
    let inc: Vec<f64> = z.iter().map(|v| s * v).collect();
    advance(&mut state, eta, &DriftSpec::CriticalLog, &DiffusionSpec::Identity, &inc);
    state
}

/// Scaling of the surrogate scheme: `Some((alpha, sigma))` multiplies the
/// noise by `eta^{1/alpha} / sigma`; `None` uses the increment as given.
pub type Surrogate = Option<(f64, f64)>;

/// General kernel `Y + eta f(Y) + g(Y) dL`.
pub fn em_step_general(
    mut state: PathState,
    eta: f64,
    drift: &DriftSpec,
    diffusion: &DiffusionSpec,
    noise: &[f64],
    surrogate: Surrogate,
) -> Result<PathState> {
    if noise.len() != state.y.len() {
        return Err(Error::DimensionMismatch { expected: state.y.len(), got: noise.len() });
    }
    diffusion.validate(state.y.len())?;
    match surrogate {
        Some((alpha, sigma)) => {
            let s = surrogate_scale(eta, alpha, sigma);
            let inc: Vec<f64> = noise.iter().map(|v| s * v).collect();
            advance(&mut state, eta, drift, diffusion, &inc);
        }
        None => advance(&mut state, eta, drift, diffusion, noise),
    }
    Ok(state)
}

/// Pre-validated drift/diffusion pair used by the ensemble loop.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
    pub eta: f64,
}

impl Stepper {
    pub fn step(&self, state: &mut PathState, increment: &[f64]) {
        advance(state, self.eta, &self.drift, &self.diffusion, increment);
    }
}

/// One EM step carried in log space:
/// `Y' = (1 + eta phi(|Y|)) Y + scale g(Y) Z`.
///
/// Exact up to rounding for any magnitude. Matrix diffusions are applied to
/// the direction of `Z`.
pub fn em_step_log(
    y: &LogVector,
    eta: f64,
    drift: &DriftSpec,
    diffusion: &DiffusionSpec,
    noise_scale: f64,
    z: &LogVector,
) -> LogVector {
    let ln_r = y.ln_norm;
    let phi = if y.is_zero() { SignedLog::from_f64(drift.radial_factor(0.0)) } else { drift.radial_factor_log(ln_r) };
    let growth = SignedLog::ONE + SignedLog::from_f64(eta) * phi;
    let (coef, noise) = match diffusion {
        DiffusionSpec::Matrix { dim, entries } => {
            let mut out = vec![0.0; *dim];
            diffusion.apply(0.0, &z.dir, &mut out);
            let gz = LogVector::from_vec(&out);
            let gz = LogVector::from_parts(gz.ln_norm + z.ln_norm, gz.dir);
            let _ = entries;
            (SignedLog::from_f64(noise_scale), gz)
        }
        other => {
            let psi = if y.is_zero() {
                SignedLog::from_f64(other.isotropic_factor(0.0).unwrap_or(0.0))
            } else {
                other.isotropic_factor_log(ln_r).unwrap_or(SignedLog::ZERO)
            };
            (SignedLog::from_f64(noise_scale) * psi, z.clone())
        }
    };
    LogVector::linear_combination(growth, y, coef, &noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn drift_examples() {
        assert_eq!(drift_eval(&DriftSpec::CriticalLog, &[0.0]).unwrap(), vec![0.0]);
        let v = drift_eval(&DriftSpec::CriticalLog, &[1.0]).unwrap()[0];
        assert!(close(v, -std::f64::consts::LN_2, 1e-15));
        let v = drift_eval(&DriftSpec::PowerLaw { theta: 2.0 }, &[-2.0]).unwrap()[0];
        assert_eq!(v, 8.0);
        assert_eq!(drift_eval(&DriftSpec::Linear, &[3.0, -1.0]).unwrap(), vec![-3.0, 1.0]);
        assert!(drift_eval(&DriftSpec::CriticalLog, &[f64::NAN]).is_err());
        assert!(DriftSpec::PowerLaw { theta: 0.0 }.validate().is_err());
    }

    #[test]
    fn kernel_examples() {
        let s = em_step_brownian_critical(PathState::new(vec![1.0]), 0.001, &[0.0]);
        assert!(close(s.y[0], 1.0 - 0.001 * std::f64::consts::LN_2, 1e-15));
        assert!(close(s.y[0], 0.9993069, 1e-7));
        let s = em_step_brownian_critical(PathState::new(vec![1.0]), 0.001, &[1.0]);
        assert!(close(s.y[0], 1.0309297, 1e-7));
        let s = em_step_brownian_critical(PathState::new(vec![0.0]), 0.3, &[0.0]);
        assert_eq!(s.y[0], 0.0);
        assert_eq!(s.k, 1);

        let s = em_step_stable_critical(PathState::new(vec![10.0]), 1.0, &[0.0]);
        assert!(close(s.y[0], 10.0 * (1.0 - 11f64.ln()), 1e-12));
        assert!(close(s.y[0], -13.978, 1e-3));

        let sigma = std::f64::consts::FRAC_PI_2;
        let s = em_step_pareto_critical(PathState::new(vec![0.0]), 1.0, 1.0, sigma, &[2.0]);
        assert!(close(s.y[0], 4.0 / std::f64::consts::PI, 1e-15));
        let s = em_step_pareto_critical(PathState::new(vec![0.0]), 0.25, 1.5, sigma, &[1.0]);
        assert!(close(s.y[0], surrogate_scale(0.25, 1.5, sigma), 0.0));

        let s = em_step_general(
            PathState::new(vec![2.0]),
            0.1,
            &DriftSpec::PowerLaw { theta: 2.0 },
            &DiffusionSpec::Identity,
            &[0.0],
            None,
        )
        .unwrap();
        assert!(close(s.y[0], 1.2, 1e-15));
        let s = em_step_general(
            PathState::new(vec![2.5, -1.0]),
            0.1,
            &DriftSpec::Custom(vec![]),
            &DiffusionSpec::Identity,
            &[0.0, 0.0],
            None,
        )
        .unwrap();
        assert_eq!(s.y, vec![2.5, -1.0]);
        assert!(em_step_general(
            PathState::new(vec![1.0]),
            0.1,
            &DriftSpec::Linear,
            &DiffusionSpec::Identity,
            &[0.0, 0.0],
            None
        )
        .is_err());
    }

    #[test]
    fn general_kernel_specializes_exactly() {
        let mut rng = StreamRng::new(3, 3);
        for _ in 0..1000 {
            let y = vec![rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
            let w = vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let eta = rng.random_range(0.001..1.0);
            let a = em_step_pareto_critical(PathState::new(y.clone()), eta, 1.3, 1.7, &w);
            let b = em_step_general(
                PathState::new(y.clone()),
                eta,
                &DriftSpec::CriticalLog,
                &DiffusionSpec::Identity,
                &w,
                Some((1.3, 1.7)),
            )
            .unwrap();
            assert_eq!(a, b);
            let a = em_step_stable_critical(PathState::new(y.clone()), eta, &w);
            let b =
                em_step_general(PathState::new(y), eta, &DriftSpec::CriticalLog, &DiffusionSpec::Identity, &w, None)
                    .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn critical_kernels_coincide_without_noise() {
        let mut rng = StreamRng::new(4, 0);
        for _ in 0..1000 {
            let y = vec![rng.random_range(-1e3..1e3)];
            let eta = rng.random_range(0.0001..1.0);
            let a = em_step_brownian_critical(PathState::new(y.clone()), eta, &[0.0]);
            let b = em_step_stable_critical(PathState::new(y.clone()), eta, &[0.0]);
            let c = em_step_pareto_critical(PathState::new(y), eta, 0.7, 1.1, &[0.0]);
            assert_eq!(a, b);
            assert_eq!(b, c);
        }
    }

    #[test]
    fn drift_is_dissipative() {
        let mut rng = StreamRng::new(5, 0);
        for _ in 0..10_000 {
            let d = rng.random_range(1..5usize);
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1e6..1e6)).collect();
            let f = drift_eval(&DriftSpec::CriticalLog, &x).unwrap();
            let inner: f64 = x.iter().zip(&f).map(|(a, b)| a * b).sum();
            assert!(inner <= 0.0);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let mut rng = StreamRng::new(6, 0);
        for _ in 0..500 {
            let x = vec![rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            let w = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let eta = rng.random_range(0.01..1.0);
            let base = em_step_stable_critical(PathState::new(x.clone()), eta, &w);
            // signed permutations are exact in floating point
            let perm = |v: &[f64]| vec![-v[1], v[0]];
            let rot = em_step_stable_critical(PathState::new(perm(&x)), eta, &perm(&w));
            assert_eq!(rot.y, perm(&base.y));
            // general rotation up to rounding
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let q = |v: &[f64]| vec![th.cos() * v[0] - th.sin() * v[1], th.sin() * v[0] + th.cos() * v[1]];
            let rot = em_step_stable_critical(PathState::new(q(&x)), eta, &q(&w));
            for (a, b) in rot.y.iter().zip(q(&base.y)) {
                assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn saturation_freezes_path() {
        let mut s = PathState::new(vec![1e307]);
        s = em_step_stable_critical(s, 1.0, &[0.0]);
        assert!(s.overflowed);
        assert_eq!(s.overflow_step, Some(1));
        assert_eq!(s.magnitude(), f64::INFINITY);
        let s = em_step_stable_critical(s, 1.0, &[-1e308]);
        assert!(s.overflowed && s.y[0] == f64::INFINITY);
        assert_eq!(s.k, 2);
        assert_eq!(s.overflow_step, Some(1));
    }

    #[test]
    fn assumption_a_examples() {
        let p = AssumptionAParams::new(3.0, 1.5, 1.0).unwrap();
        let radii = [1.0, 2.0, 10.0, 1e3, 1e6];
        let rep =
            check_assumption_a(&DriftSpec::PowerLaw { theta: 2.0 }, &DiffusionSpec::Identity, p, 1, &radii).unwrap();
        assert!(rep.holds, "{rep:?}");
        let rep =
            check_assumption_a(&DriftSpec::PowerLaw { theta: 2.0 }, &DiffusionSpec::Identity, p, 3, &radii).unwrap();
        assert!(rep.holds);

        let p = AssumptionAParams::new(1.5, 1.2, 1.0).unwrap();
        let rep = check_assumption_a(&DriftSpec::Linear, &DiffusionSpec::Identity, p, 1, &[10.0, 1e4]).unwrap();
        assert!(!rep.holds);
        assert!(!rep.asymptotic_holds);
        assert_eq!(rep.first_violation().unwrap().inequality, AssumptionInequality::LowerGrowth);

        assert!(check_assumption_a(&DriftSpec::Linear, &DiffusionSpec::Identity, p, 1, &[0.5]).is_err());
        assert!(AssumptionAParams::new(1.5, 1.5, 1.0).is_err());
        assert!(AssumptionAParams::new(2.0, 1.5, 0.5).is_err());

        // diffusion carries the fast growth, drift stays below |x|^lambda
        let p = AssumptionAParams::new(2.0, 1.5, 2.0).unwrap();
        let rep = check_assumption_a(
            &DriftSpec::Linear,
            &DiffusionSpec::Radial(vec![RadialTerm::new(1.0, 2.0, 0)]),
            p,
            2,
            &[2.0, 50.0, 1e5],
        )
        .unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let n = spectral_norm(2, &[3.0, 0.0, 0.0, -5.0]);
        assert!((n - 5.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn log_step_matches_plain_step(
            y in prop::collection::vec(-1e4f64..1e4, 2),
            z in prop::collection::vec(-10.0f64..10.0, 2),
            eta in 0.001f64..1.0,
            theta in 0.1f64..3.0,
        ) {
            for drift in [DriftSpec::CriticalLog, DriftSpec::PowerLaw { theta }] {
                let plain = em_step_general(
                    PathState::new(y.clone()), eta, &drift, &DiffusionSpec::Scalar(2.0), &z, Some((1.2, 1.5)),
                ).unwrap();
                let logged = em_step_log(
                    &LogVector::from_vec(&y), eta, &drift, &DiffusionSpec::Scalar(2.0),
                    surrogate_scale(eta, 1.2, 1.5), &LogVector::from_vec(&z),
                );
                if plain.overflowed {
                    prop_assert!(logged.ln_norm > 700.0);
                } else {
                    let back = logged.to_vec();
                    let scale = stable_norm(&y) * (1.0 + eta * drift.radial_factor(stable_norm(&y)).abs()) + 100.0;
                    for (a, b) in back.iter().zip(&plain.y) {
                        prop_assert!((a - b).abs() <= 1e-11 * scale);
                    }
                }
            }
        }
    }
}
