//! Blow-up certificates for heavy-tailed EM schemes.
//!
//! A [`RegimeCertificate`] evaluates the explicit preconditions under which
//! an EM scheme driven by heavy-tailed noise provably has exploding moments.
//! From a valid certificate, [`build_event`] constructs the noise event on
//! which every path grows at a guaranteed rate: the first increment is huge
//! and every later increment has radius in `[1 + eta, 2 + 2 eta]`.
//!
//! Thresholds such as `e^{n K}` leave the `f64` range for moderate `n`, so
//! every probability and path magnitude here is handled as a logarithm.

use rayon::prelude::*;

use crate::constants::{constant_set, k1, k2, ConstantSet, StableParams};
use crate::dynamics::{check_assumption_a, em_step_log, surrogate_scale, AssumptionAParams, DiffusionSpec, DriftSpec};
use crate::logspace::{stable_norm, LogVector};
use crate::noise::{
    conditioned_ln_radius, derive_seed, fill_direction, fill_pareto_conditioned, fill_stable, pareto_radius,
    RadiusWindow, StreamRng,
};
use crate::{Error, Result};

/// Relative slack, in log space, allowed for rounding in pathwise checks.
pub const CLAIM_RTOL: f64 = 1e-10;

const DRAW_CHUNK: usize = 1 << 16;

/// Which scheme a certificate is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    /// Log-critical drift `-x log(1+|x|)`, exact stable increments.
    CriticalStable,
    /// Log-critical drift, Pareto-surrogate increments.
    CriticalPareto,
    /// Polynomially growing drift/diffusion, exact stable increments.
    PolynomialStable,
    /// Polynomially growing drift/diffusion, Pareto-surrogate increments.
    PolynomialPareto,
}

impl RegimeKind {
    pub fn is_pareto(self) -> bool {
        matches!(self, RegimeKind::CriticalPareto | RegimeKind::PolynomialPareto)
    }

    pub fn is_critical(self) -> bool {
        matches!(self, RegimeKind::CriticalStable | RegimeKind::CriticalPareto)
    }
}

/// Drift, diffusion and growth constants of a polynomial regime.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
    pub growth: AssumptionAParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeInput {
    pub kind: RegimeKind,
    pub params: StableParams,
    pub beta: f64,
    pub horizon: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    /// Heat-kernel constant `K(d, alpha) >= 1`; only the exact-stable kinds
    /// depend on it.
    pub k_heat: f64,
    /// Required for the polynomial kinds, ignored otherwise.
    pub model: Option<PolynomialModel>,
}

impl RegimeInput {
    pub fn critical(pareto: bool, params: StableParams, beta: f64, horizon: f64, steps: usize, x0: Vec<f64>) -> Self {
        Self {
            kind: if pareto { RegimeKind::CriticalPareto } else { RegimeKind::CriticalStable },
            params,
            beta,
            horizon,
            steps,
            x0,
            k_heat: 1.0,
            model: None,
        }
    }

    pub fn polynomial(
        pareto: bool,
        params: StableParams,
        beta: f64,
        horizon: f64,
        steps: usize,
        x0: Vec<f64>,
        model: PolynomialModel,
    ) -> Self {
        Self {
            kind: if pareto { RegimeKind::PolynomialPareto } else { RegimeKind::PolynomialStable },
            params,
            beta,
            horizon,
            steps,
            x0,
            k_heat: 1.0,
            model: Some(model),
        }
    }

    pub fn with_k_heat(mut self, k_heat: f64) -> Self {
        self.k_heat = k_heat;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn eta(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Drift and diffusion the scheme actually runs with.
    pub fn dynamics(&self) -> (DriftSpec, DiffusionSpec) {
        match (&self.model, self.kind.is_critical()) {
            (Some(m), false) => (m.drift.clone(), m.diffusion.clone()),
            _ => (DriftSpec::CriticalLog, DiffusionSpec::Identity),
        }
    }
}

/// One checked precondition `lhs (op) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCertificate {
    pub input: RegimeInput,
    pub eta: f64,
    pub constants: ConstantSet,
    /// `sigma` for Pareto kinds, 1 for exact-stable kinds.
    pub noise_scale: f64,
    /// Annulus constant: `kappa` for Pareto kinds, `delta` otherwise.
    pub annulus: f64,
    /// `K_1` or `K_2` (critical kinds).
    pub k_const: Option<f64>,
    /// Base radius `r_n` (polynomial kinds).
    pub r_n: Option<f64>,
    /// Smallest `M >= 1` with `|g(x0)| >= 1/M` and `|x0| + T |f(x0)| <= M`.
    pub m_const: Option<f64>,
    /// Per-step log-growth rate of the moment lower bound (critical kinds).
    pub growth_rate: Option<f64>,
    pub conditions: Vec<Condition>,
}

impl RegimeCertificate {
    pub fn valid(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.conditions.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

pub const COND_STEP: &str = "step size T/n <= 1";
pub const COND_K: &str = "K < (c - ln c)/(alpha - beta)";
pub const COND_INITIAL: &str = "n K >= ln(|x0| (1 + ln(1 + |x0|)))";
pub const COND_WORKING: &str = "eta n K - 2 (1+eta) eta^(1/alpha)/s - 1 >= e^(c/beta)";
pub const COND_ASSUMPTION: &str = "growth sandwich violations = 0";
pub const COND_NONDEGENERATE: &str = "|g(x0)| > 0";
pub const COND_STEP_BALANCE: &str = "2 (1+eta) eta^(1/alpha)/s vs eta";

/// `ln(|x0| (1 + ln(1 + |x0|)))`, `-inf` at the origin.
fn ln_initial_size(x0: &[f64]) -> f64 {
    let r = stable_norm(x0);
    r.ln() + r.ln_1p().ln_1p()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let top = a.max(b);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + ((a - top).exp() + (b - top).exp()).ln()
}

/// Evaluates every explicit precondition of the selected regime.
pub fn certify_regime(input: &RegimeInput) -> Result<RegimeCertificate> {
    let p = input.params;
    p.require_heavy_tailed()?;
    let alpha = p.alpha;
    if !(input.beta > 0.0 && input.beta < alpha) {
        return Err(Error::BetaOutOfRange { beta: input.beta, alpha });
    }
    if !(input.horizon > 0.0 && input.horizon.is_finite()) {
        return Err(Error::InvalidParameter { name: "horizon", value: input.horizon, reason: "must be positive" });
    }
    if input.steps == 0 {
        return Err(Error::InvalidParameter { name: "steps", value: 0.0, reason: "must be >= 1" });
    }
    if input.x0.len() != p.d {
        return Err(Error::DimensionMismatch { expected: p.d, got: input.x0.len() });
    }
    if input.x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x0"));
    }
    let constants = constant_set(p, input.k_heat)?;
    let eta = input.eta();
    let pareto = input.kind.is_pareto();
    let s = if pareto { constants.sigma } else { 1.0 };
    let c = if pareto { constants.kappa_alpha } else { constants.delta_alpha };
    let n = input.steps as f64;
    let noise_term = 2.0 * (1.0 + eta) * eta.powf(1.0 / alpha) / s;

    let mut cert = RegimeCertificate {
        input: input.clone(),
        eta,
        constants,
        noise_scale: s,
        annulus: c,
        k_const: None,
        r_n: None,
        m_const: None,
        growth_rate: None,
        conditions: Vec::new(),
    };

    if input.kind.is_critical() {
        let k =
            if pareto { k2(alpha, input.beta, input.horizon, s, c)? } else { k1(alpha, input.beta, input.horizon, c)? };
        let bound = (c - c.ln()) / (alpha - input.beta);
        let ln_x0 = ln_initial_size(&input.x0);
        let working = eta * n * k - noise_term - 1.0;
        let target = (c / input.beta).exp();
        cert.k_const = Some(k);
        cert.growth_rate = Some(input.beta * k + c - alpha * k - c.ln());
        cert.conditions = vec![
            Condition { name: COND_STEP, lhs: eta, rhs: 1.0, pass: eta <= 1.0 },
            Condition { name: COND_K, lhs: k, rhs: bound, pass: k < bound },
            Condition { name: COND_INITIAL, lhs: n * k, rhs: ln_x0, pass: n * k >= ln_x0 },
            Condition { name: COND_WORKING, lhs: working, rhs: target, pass: working >= target },
        ];
        return Ok(cert);
    }

    let model =
        input.model.as_ref().ok_or_else(|| Error::Config("polynomial regimes need a drift/diffusion model".into()))?;
    if matches!(model.diffusion, DiffusionSpec::Matrix { .. }) {
        return Err(Error::NonIsotropicDiffusion);
    }
    let a = model.growth;
    let r_n = radius_r_n(a, eta, alpha, s);
    let r0 = stable_norm(&input.x0);
    let g0 = model.diffusion.magnitude(r0);
    let f0 = model.drift.magnitude(r0);
    let m = 1f64.max(1.0 / g0).max(r0 + input.horizon * f0);
    cert.r_n = Some(r_n);
    cert.m_const = Some(m);

    let mut radii: Vec<f64> = [1.0, 1.5, 2.0, 4.0, 10.0, 100.0, 1e4, 1e8].iter().map(|x| x * a.h).collect();
    radii.push(r_n);
    let report = check_assumption_a(&model.drift, &model.diffusion, a, p.d, &radii)?;
    let violations = report.violations.len() as f64 + if report.asymptotic_holds { 0.0 } else { 1.0 };
    let balance_ok = if alpha >= 1.0 { noise_term >= eta } else { noise_term <= eta };
    cert.conditions = vec![
        Condition { name: COND_ASSUMPTION, lhs: violations, rhs: 0.0, pass: violations == 0.0 },
        Condition { name: COND_NONDEGENERATE, lhs: g0, rhs: 0.0, pass: g0 > 0.0 },
        Condition { name: COND_STEP_BALANCE, lhs: noise_term, rhs: eta, pass: balance_ok },
    ];
    Ok(cert)
}

/// Base radius of the polynomial blow-up event:
/// `max{2, H, (4H/eta + 4H^2 (1+eta) eta^{1/alpha}/(eta s))^{1/(gamma-lambda)},
/// (s H (2 + H eta) (1+eta)^{-1} eta^{-1/alpha})^{1/(gamma-lambda)}}`,
/// with `s = sigma` for Pareto noise and `s = 1` for stable noise.
pub fn radius_r_n(a: AssumptionAParams, eta: f64, alpha: f64, s: f64) -> f64 {
    let e = 1.0 / (a.gamma - a.lambda);
    let h = a.h;
    let ea = eta.powf(1.0 / alpha);
    let third = (4.0 * h / eta + 4.0 * h * h * (1.0 + eta) * ea / (eta * s)).powf(e);
    let fourth = (s * h * (2.0 + h * eta) / (1.0 + eta) / ea).powf(e);
    2f64.max(h).max(third).max(fourth)
}

/// Scans `n = 1..=n_max` and returns the first step count whose
/// certificate is valid.
pub fn smallest_valid_n(input: &RegimeInput, n_max: usize) -> Result<Option<usize>> {
    for n in 1..=n_max {
        if certify_regime(&input.clone().with_steps(n))?.valid() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// The blow-up event: `|Z_1| >= R_1` and `|Z_k|` in `window` for `k >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub kind: RegimeKind,
    pub n: usize,
    pub eta: f64,
    pub alpha: f64,
    pub d: usize,
    /// Lower bound on the first noise term `(eta^{1/alpha}/s) |Z_1|`, as a
    /// logarithm.
    pub ln_threshold: f64,
    pub window: RadiusWindow,
    pub noise_scale: f64,
    pub m_const: Option<f64>,
}

impl EventSpec {
    /// `ln R_1` with `R_1 = s * threshold / eta^{1/alpha}`, the radius the
    /// first raw increment must reach.
    pub fn ln_first_radius(&self) -> f64 {
        self.noise_scale.ln() + self.ln_threshold - self.eta.ln() / self.alpha
    }

    pub fn threshold(&self) -> f64 {
        self.ln_threshold.exp()
    }
}

/// Builds the blow-up event of a valid certificate.
pub fn build_event(cert: &RegimeCertificate) -> Result<EventSpec> {
    if let Some(c) = cert.condition(COND_NONDEGENERATE) {
        if !c.pass {
            return Err(Error::DegenerateDiffusion);
        }
    }
    if !cert.valid() {
        return Err(Error::InvalidCertificate(cert.failing().join("; ")));
    }
    let input = &cert.input;
    let eta = cert.eta;
    let ln_threshold = if input.kind.is_critical() {
        let nk = input.steps as f64 * cert.k_const.expect("critical certificate carries K");
        log_add_exp(ln_initial_size(&input.x0), nk)
    } else {
        let m = cert.m_const.expect("polynomial certificate carries M");
        let r = cert.r_n.expect("polynomial certificate carries r_n");
        m.ln() + (r + m).ln()
    };
    Ok(EventSpec {
        kind: input.kind,
        n: input.steps,
        eta,
        alpha: input.params.alpha,
        d: input.params.d,
        ln_threshold,
        window: RadiusWindow::new(1.0 + eta, 2.0 + 2.0 * eta)?,
        noise_scale: cert.noise_scale,
        m_const: cert.m_const,
    })
}

/// Exact `ln P(event)` under Pareto noise:
/// `-alpha ln R_1 + (n-1) ln((1+eta)^{-alpha} (1 - 2^{-alpha}))`.
pub fn event_probability_exact(ev: &EventSpec) -> Result<f64> {
    if !ev.kind.is_pareto() {
        return Err(Error::RequiresPareto("exact event probability"));
    }
    let ln_r1 = ev.ln_first_radius();
    if ln_r1 < 0.0 {
        return Err(Error::ThresholdBelowSupport(ln_r1.exp()));
    }
    let a = ev.alpha;
    let ln_window = -a * (1.0 + ev.eta).ln() + (-(2f64.powf(-a))).ln_1p();
    Ok(-a * ln_r1 + (ev.n as f64 - 1.0) * ln_window)
}

/// Logarithm of the explicit probability lower bound from the blow-up
/// argument, with `s` and the annulus constant `c` of the certificate:
///
/// * critical: `ln(T/(4 s^alpha)) - ln n - alpha n K - n ln c - alpha n ln(1+T/n)`
/// * polynomial: `ln T - ln n - n ln c - alpha ln(s M (r_n+M)) - alpha n ln(1+T/n)`
pub fn explicit_lower_bound(cert: &RegimeCertificate) -> Result<f64> {
    let i = &cert.input;
    let a = i.params.alpha;
    let n = i.steps as f64;
    let t = i.horizon;
    let c = cert.annulus;
    let tail = -n.ln() - n * c.ln() - a * n * (1.0 + t / n).ln();
    Ok(match (cert.k_const, cert.r_n, cert.m_const) {
        (Some(k), _, _) => (t / (4.0 * cert.noise_scale.powf(a))).ln() - a * n * k + tail,
        (None, Some(r), Some(m)) => t.ln() - a * (cert.noise_scale * m * (r + m)).ln() + tail,
        _ => return Err(Error::InvalidCertificate("certificate lacks its event constants".into())),
    })
}

/// Lower bound on `ln P(event)` under exact stable noise, from the
/// heat-kernel estimates `P(|Z| >= z) >= s_{d-1} / (2^{d+alpha} alpha K) z^{-alpha}`
/// and `P(z <= |Z| <= 2z) >= 1 / (delta z^alpha)`. Conditional on the
/// supplied heat-kernel constant.
pub fn event_probability_bound_stable(cert: &RegimeCertificate, ev: &EventSpec) -> Result<f64> {
    if ev.kind.is_pareto() {
        return Err(Error::InvalidParameter {
            name: "kind",
            value: 0.0,
            reason: "Pareto events have an exact probability",
        });
    }
    let ln_r1 = ev.ln_first_radius();
    if ln_r1 < 0.0 {
        return Err(Error::ThresholdBelowSupport(ln_r1.exp()));
    }
    let k = &cert.constants;
    let a = ev.alpha;
    let ln_tail = k.s_dminus1.ln() - (ev.d as f64 + a) * 2f64.ln() - a.ln() - k.k_heat.ln() - a * ln_r1;
    let ln_window = -k.delta_alpha.ln() - a * (1.0 + ev.eta).ln();
    Ok(ln_tail + (ev.n as f64 - 1.0) * ln_window)
}

/// One conditioned path and its pathwise growth check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedPath {
    /// `ln |Y_m|` for `m = 0..=n`.
    pub ln_norms: Vec<f64>,
    /// Guaranteed `ln |Y_m|` lower bound for `m = 1..=n` (index `m - 1`).
    pub ln_bounds: Vec<f64>,
    pub holds: bool,
    pub first_violation: Option<usize>,
}

/// Guaranteed lower bound on `ln |Y_m|` on the event.
pub fn claim_ln_bound(cert: &RegimeCertificate, m: usize) -> f64 {
    let i = &cert.input;
    let m1 = (m - 1) as f64;
    match (cert.k_const, cert.r_n) {
        (Some(k), _) => cert.annulus / i.beta * m1 + i.steps as f64 * k,
        (None, Some(r)) => {
            let lambda = i.model.as_ref().expect("polynomial certificate has a model").growth.lambda;
            lambda.powf(m1) * r.ln()
        }
        _ => unreachable!("certificates carry K or r_n"),
    }
}

/// Runs the EM recursion along one noise path drawn from the event: the
/// first radius from the Pareto law conditioned on `|Z_1| >= R_1`, the rest
/// conditioned on the window. Magnitudes are carried in log space.
pub fn simulate_conditioned_path(
    cert: &RegimeCertificate,
    ev: &EventSpec,
    rng: &mut StreamRng,
) -> Result<ConditionedPath> {
    if !ev.kind.is_pareto() {
        return Err(Error::RequiresPareto("conditioned path sampling"));
    }
    let ln_r1 = ev.ln_first_radius();
    if ln_r1 < 0.0 {
        return Err(Error::ThresholdBelowSupport(ln_r1.exp()));
    }
    let (drift, diffusion) = cert.input.dynamics();
    let alpha = ev.alpha;
    let scale = surrogate_scale(ev.eta, alpha, ev.noise_scale);
    let mut y = LogVector::from_vec(&cert.input.x0);
    let mut ln_norms = Vec::with_capacity(ev.n + 1);
    let mut ln_bounds = Vec::with_capacity(ev.n);
    ln_norms.push(y.ln_norm);
    let mut dir = vec![0.0; ev.d];
    let mut first_violation = None;
    for m in 1..=ev.n {
        let z = if m == 1 {
            let ln_r = conditioned_ln_radius(rng, alpha, ln_r1, f64::INFINITY);
            fill_direction(rng, &mut dir);
            LogVector::from_parts(ln_r, dir.clone())
        } else {
            fill_pareto_conditioned(rng, alpha, ev.window, &mut dir);
            LogVector::from_vec(&dir)
        };
        y = em_step_log(&y, ev.eta, &drift, &diffusion, scale, &z);
        let bound = claim_ln_bound(cert, m);
        if first_violation.is_none() && y.ln_norm < bound - CLAIM_RTOL * bound.abs().max(1.0) {
            first_violation = Some(m);
        }
        ln_norms.push(y.ln_norm);
        ln_bounds.push(bound);
    }
    Ok(ConditionedPath { ln_norms, ln_bounds, holds: first_violation.is_none(), first_violation })
}

/// Outcome of many conditioned paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimSummary {
    pub paths: usize,
    pub held: usize,
    /// Smallest `ln |Y_m| - bound` over all paths and steps.
    pub min_margin: f64,
}

/// Runs `paths` conditioned paths; path `i` uses stream `(seed, i)`.
pub fn check_claim(cert: &RegimeCertificate, ev: &EventSpec, paths: usize, seed: u64) -> Result<ClaimSummary> {
    let results: Vec<ConditionedPath> = (0..paths)
        .into_par_iter()
        .map(|i| simulate_conditioned_path(cert, ev, &mut StreamRng::new(seed, i as u64)))
        .collect::<Result<_>>()?;
    let held = results.iter().filter(|r| r.holds).count();
    let min_margin = results
        .iter()
        .flat_map(|r| r.ln_norms[1..].iter().zip(&r.ln_bounds).map(|(a, b)| a - b))
        .fold(f64::INFINITY, f64::min);
    Ok(ClaimSummary { paths, held, min_margin })
}

/// Lower bound on `ln E|Y_n|^beta` from the event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBound {
    pub ln_bound: f64,
    /// `beta K + c - alpha K - ln c` for the critical kinds.
    pub growth_rate: Option<f64>,
}

/// `ln P(event) + beta * (guaranteed ln |Y_n|)`, using the exact event
/// probability for Pareto kinds and the heat-kernel bound otherwise.
pub fn conditioned_moment_lower_bound(cert: &RegimeCertificate, ev: &EventSpec) -> Result<MomentBound> {
    if !cert.valid() {
        return Err(Error::InvalidCertificate(cert.failing().join("; ")));
    }
    let ln_p =
        if ev.kind.is_pareto() { event_probability_exact(ev)? } else { event_probability_bound_stable(cert, ev)? };
    Ok(MomentBound { ln_bound: ln_p + cert.input.beta * claim_ln_bound(cert, ev.n), growth_rate: cert.growth_rate })
}

/// Monte-Carlo frequency with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub draws: u64,
    pub hits: u64,
    pub p: f64,
    pub std_error: f64,
}

impl Frequency {
    fn new(draws: u64, hits: u64) -> Self {
        let p = hits as f64 / draws as f64;
        Self { draws, hits, p, std_error: (p * (1.0 - p) / draws as f64).sqrt() }
    }
}

fn chunked_count<F>(draws: u64, seed: u64, hit: F) -> Frequency
where
    F: Fn(&mut StreamRng) -> bool + Sync,
{
    let chunks = draws.div_ceil(DRAW_CHUNK as u64);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = StreamRng::new(seed, c);
            let len = (draws - c * DRAW_CHUNK as u64).min(DRAW_CHUNK as u64);
            (0..len).filter(|_| hit(&mut rng)).count() as u64
        })
        .sum();
    Frequency::new(draws, hits)
}

/// Raw (unconditioned) Monte-Carlo estimate of `P(event)` under Pareto noise.
pub fn estimate_event_probability(ev: &EventSpec, draws: u64, seed: u64) -> Result<Frequency> {
    if !ev.kind.is_pareto() {
        return Err(Error::RequiresPareto("raw event estimation"));
    }
    let ln_r1 = ev.ln_first_radius();
    let (a, w, n) = (ev.alpha, ev.window, ev.n);
    Ok(chunked_count(draws, seed, |rng| {
        // only radii matter, directions are irrelevant to the event
        pareto_radius(rng, a).ln() >= ln_r1 && (2..=n).all(|_| w.contains(pareto_radius(rng, a)))
    }))
}

/// Monte-Carlo annulus mass `P(z <= |Z| <= 2z)` of the standard stable law
/// next to its heat-kernel lower bound `1 / (delta z^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCheck {
    pub z: f64,
    pub frequency: Frequency,
    pub lower_bound: f64,
    /// Bound not rejected at four standard errors.
    pub pass: bool,
}

pub fn stable_window_check(
    p: StableParams,
    k_heat: f64,
    z_values: &[f64],
    draws: u64,
    seed: u64,
) -> Result<Vec<WindowCheck>> {
    let c = constant_set(p, k_heat)?;
    z_values
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            if !(z > 1.0) || !z.is_finite() {
                return Err(Error::InvalidParameter { name: "z", value: z, reason: "must exceed 1" });
            }
            let freq = chunked_count(draws, derive_seed(seed, i as u64), |rng| {
                let mut v = vec![0.0; p.d];
                fill_stable(rng, p.alpha, 1.0, &mut v);
                let r = stable_norm(&v);
                r >= z && r <= 2.0 * z
            });
            let lower_bound = 1.0 / (c.delta_alpha * z.powf(p.alpha));
            Ok(WindowCheck { z, frequency: freq, lower_bound, pass: freq.p + 4.0 * freq.std_error >= lower_bound })
        })
        .collect()
}
