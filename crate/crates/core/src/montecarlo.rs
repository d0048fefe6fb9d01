//! Path ensembles and moment estimation.
//!
//! Path `i` of an ensemble with seed `s` draws from stream `(s, i)`. Paths
//! are advanced in fixed chunks and every reduction runs over fixed chunks in
//! path order, so reports are bit-identical for any thread count.

use rayon::prelude::*;

use crate::constants::{sigma, StableParams};
use crate::dynamics::{surrogate_scale, DiffusionSpec, DriftSpec, EmConfig, PathState, Stepper};
use crate::noise::{derive_seed, fill_gaussian, fill_pareto, fill_stable, NoiseKind, StreamRng};
use crate::{Error, Result};

const CHUNK: usize = 1024;

/// Drift, diffusion and noise law of an EM scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
    pub noise: NoiseKind,
    pub dim: usize,
}

/// Named special cases of [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    BrownianCritical,
    StableCritical,
    ParetoCritical,
    General,
}

impl ModelSpec {
    pub fn new(drift: DriftSpec, diffusion: DiffusionSpec, noise: NoiseKind, dim: usize) -> Result<Self> {
        let m = Self { drift, diffusion, noise, dim };
        m.validate()?;
        Ok(m)
    }

    pub fn brownian_critical(dim: usize) -> Result<Self> {
        Self::new(DriftSpec::CriticalLog, DiffusionSpec::Identity, NoiseKind::Gaussian, dim)
    }

    pub fn stable_critical(p: StableParams) -> Result<Self> {
        Self::new(DriftSpec::CriticalLog, DiffusionSpec::Identity, NoiseKind::IsotropicStable(p), p.d)
    }

    pub fn pareto_critical(p: StableParams) -> Result<Self> {
        Self::new(DriftSpec::CriticalLog, DiffusionSpec::Identity, NoiseKind::Pareto(p), p.d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::ZeroDimension);
        }
        self.drift.validate()?;
        self.diffusion.validate(self.dim)?;
        self.noise.validate()?;
        match self.noise {
            NoiseKind::IsotropicStable(p) | NoiseKind::Pareto(p) if p.d != self.dim => {
                Err(Error::DimensionMismatch { expected: self.dim, got: p.d })
            }
            _ => Ok(()),
        }
    }

    pub fn scheme(&self) -> Scheme {
        let critical = self.drift == DriftSpec::CriticalLog && self.diffusion == DiffusionSpec::Identity;
        match (critical, self.noise) {
            (true, NoiseKind::Gaussian) => Scheme::BrownianCritical,
            (true, NoiseKind::IsotropicStable(_)) => Scheme::StableCritical,
            (true, NoiseKind::Pareto(_)) => Scheme::ParetoCritical,
            _ => Scheme::General,
        }
    }
}

/// Ensemble size and what to record.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub paths: usize,
    /// Record every this many steps; step 0 and the final step are always
    /// recorded.
    pub record_every: usize,
    pub betas: Vec<f64>,
    pub quantiles: Vec<f64>,
    /// Keep `|Y_k|` at recorded steps for this many leading paths.
    pub trace_paths: usize,
}

impl EnsembleConfig {
    pub fn new(paths: usize, record_every: usize, betas: Vec<f64>) -> Result<Self> {
        let c = Self { paths, record_every, betas, quantiles: vec![0.5, 0.9], trace_paths: 0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidParameter { name: "paths", value: 0.0, reason: "must be >= 1" });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter { name: "record_every", value: 0.0, reason: "must be >= 1" });
        }
        if self.betas.is_empty() {
            return Err(Error::Config("at least one moment order beta is required".into()));
        }
        for &b in &self.betas {
            if !(b > 0.0 && b <= 2.0) {
                return Err(Error::InvalidParameter { name: "beta", value: b, reason: "must lie in (0, 2]" });
            }
        }
        for &q in &self.quantiles {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidParameter { name: "quantile", value: q, reason: "must lie in (0, 1)" });
            }
        }
        Ok(())
    }
}

/// Aggregates at one recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// `(1/M) sum |Y_k|^beta` per beta; `+inf` if any path is saturated or
    /// the mean exceeds the `f64` range.
    pub moments: Vec<f64>,
    /// Natural log of the estimate, evaluated in log space; `+inf` only when
    /// a path is saturated.
    pub ln_moments: Vec<f64>,
    /// Standard error of each estimate.
    pub std_errors: Vec<f64>,
    /// Nearest-rank quantiles of `|Y_k|`; saturated paths count as `+inf`.
    pub quantiles: Vec<f64>,
    pub overflowed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub paths: usize,
    pub eta: f64,
    pub betas: Vec<f64>,
    pub quantile_levels: Vec<f64>,
    pub records: Vec<StepRecord>,
    /// `traces[i][j]` is `|Y|` of path `i` at `records[j].step`.
    pub traces: Vec<Vec<f64>>,
}

impl MomentReport {
    pub fn final_record(&self) -> &StepRecord {
        self.records.last().expect("reports always hold step 0")
    }

    pub fn record(&self, step: usize) -> Option<&StepRecord> {
        self.records.iter().find(|r| r.step == step)
    }
}

enum Increment {
    Gaussian { scale: f64 },
    Stable { alpha: f64, t: f64 },
    Pareto { alpha: f64, scale: f64 },
}

impl Increment {
    fn new(noise: &NoiseKind, eta: f64) -> Result<Self> {
        Ok(match noise {
            NoiseKind::Gaussian => Increment::Gaussian { scale: eta.sqrt() },
            NoiseKind::IsotropicStable(p) => Increment::Stable { alpha: p.alpha, t: eta },
            NoiseKind::Pareto(p) => {
                Increment::Pareto { alpha: p.alpha, scale: surrogate_scale(eta, p.alpha, sigma(*p)?) }
            }
        })
    }

    fn fill(&self, rng: &mut StreamRng, out: &mut [f64]) {
        match *self {
            Increment::Gaussian { scale } => {
                fill_gaussian(rng, out);
                out.iter_mut().for_each(|x| *x *= scale);
            }
            Increment::Stable { alpha, t } => fill_stable(rng, alpha, t, out),
            Increment::Pareto { alpha, scale } => {
                fill_pareto(rng, alpha, out);
                out.iter_mut().for_each(|x| *x *= scale);
            }
        }
    }
}

struct Slot {
    rng: StreamRng,
    state: PathState,
    inc: Vec<f64>,
}

impl Slot {
    fn advance(&mut self, noise: &Increment, stepper: &Stepper) {
        if self.state.overflowed {
            // no draws needed once frozen
            self.state.k += 1;
            return;
        }
        noise.fill(&mut self.rng, &mut self.inc);
        stepper.step(&mut self.state, &self.inc);
    }
}

fn record_steps(n: usize, every: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=n).step_by(every).collect();
    if *steps.last().unwrap() != n {
        steps.push(n);
    }
    steps
}

/// Chunked sum in path order.
fn ordered_sum(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

/// `ln((1/M) sum exp(l_i))` in path order.
fn ordered_log_mean(logs: &[f64]) -> f64 {
    let partial: Vec<(f64, f64)> = logs
        .par_chunks(CHUNK)
        .map(|c| {
            let top = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top.is_infinite() {
                return (top, 1.0);
            }
            (top, c.iter().map(|l| (l - top).exp()).sum())
        })
        .collect();
    let top = partial.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if top.is_infinite() {
        return top;
    }
    let s: f64 = partial.iter().map(|&(t, s)| s * (t - top).exp()).sum();
    top + s.ln() - (logs.len() as f64).ln()
}

/// Nearest-rank quantile: smallest order statistic with at least `q M`
/// values at or below it.
fn nearest_rank(sorted_scratch: &mut [f64], q: f64) -> f64 {
    let m = sorted_scratch.len();
    let rank = ((q * m as f64).ceil() as usize).clamp(1, m);
    let (_, v, _) = sorted_scratch.select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b));
    *v
}

fn aggregate(step: usize, mags: &[f64], betas: &[f64], levels: &[f64]) -> StepRecord {
    let m = mags.len() as f64;
    let overflowed = mags.iter().filter(|x| **x == f64::INFINITY).count();
    let mut moments = Vec::with_capacity(betas.len());
    let mut ln_moments = Vec::with_capacity(betas.len());
    let mut std_errors = Vec::with_capacity(betas.len());
    for &beta in betas {
        let powered: Vec<f64> = mags.par_iter().map(|r| r.powf(beta)).collect();
        let mean = ordered_sum(&powered) / m;
        let se = if !mean.is_finite() {
            f64::INFINITY
        } else if mags.len() < 2 {
            0.0
        } else {
            let dev: Vec<f64> = powered.par_iter().map(|x| (x - mean) * (x - mean)).collect();
            (ordered_sum(&dev) / (m - 1.0) / m).sqrt()
        };
        let logs: Vec<f64> = mags.par_iter().map(|r| beta * r.ln()).collect();
        moments.push(mean);
        ln_moments.push(ordered_log_mean(&logs));
        std_errors.push(se);
    }
    let mut scratch = mags.to_vec();
    let quantiles = levels.iter().map(|&q| nearest_rank(&mut scratch, q)).collect();
    StepRecord { step, moments, ln_moments, std_errors, quantiles, overflowed }
}

/// Simulates `ens.paths` independent EM paths and records moments of `|Y_k|`.
///
/// Uses the current rayon pool; wrap in `ThreadPool::install` to bound it.
pub fn run_ensemble(model: &ModelSpec, cfg: &EmConfig, ens: &EnsembleConfig) -> Result<MomentReport> {
    model.validate()?;
    cfg.validate()?;
    ens.validate()?;
    if cfg.dim() != model.dim {
        return Err(Error::DimensionMismatch { expected: model.dim, got: cfg.dim() });
    }
    let eta = cfg.eta();
    let noise = Increment::new(&model.noise, eta)?;
    let stepper = Stepper { drift: model.drift.clone(), diffusion: model.diffusion.clone(), eta };

    let mut slots: Vec<Slot> = (0..ens.paths)
        .map(|i| Slot {
            rng: StreamRng::new(cfg.seed, i as u64),
            state: PathState::new(cfg.x0.clone()),
            inc: vec![0.0; model.dim],
        })
        .collect();
    let n_trace = ens.trace_paths.min(ens.paths);
    let mut traces = vec![Vec::new(); n_trace];
    let mut records = Vec::new();
    let mut mags = vec![0.0; ens.paths];
    let mut k = 0;
    for target in record_steps(cfg.steps, ens.record_every) {
        let todo = target - k;
        if todo > 0 {
            slots.par_chunks_mut(CHUNK).for_each(|chunk| {
                for slot in chunk {
                    for _ in 0..todo {
                        slot.advance(&noise, &stepper);
                    }
                }
            });
            k = target;
        }
        mags.par_iter_mut().zip(slots.par_iter()).for_each(|(m, s)| *m = s.state.magnitude());
        for (t, m) in traces.iter_mut().zip(&mags) {
            t.push(*m);
        }
        records.push(aggregate(k, &mags, &ens.betas, &ens.quantiles));
    }
    Ok(MomentReport {
        paths: ens.paths,
        eta,
        betas: ens.betas.clone(),
        quantile_levels: ens.quantiles.clone(),
        records,
        traces,
    })
}

/// Stored estimate of `E|Y_k|^beta`.
pub fn moment_of_report(report: &MomentReport, k: usize, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter { name: "beta", value: beta, reason: "must be positive" });
    }
    let j = report.betas.iter().position(|b| *b == beta);
    match (report.record(k), j) {
        (Some(r), Some(j)) => Ok(r.moments[j]),
        _ => Err(Error::MissingRecord { step: k, beta }),
    }
}

/// One ensemble per step count `n` over a fixed horizon. The ensemble for
/// `n` is seeded with `derive_seed(master_seed, n)`, so each cell replays on
/// its own regardless of which other `n` are swept.
pub fn sweep_blowup(
    model: &ModelSpec,
    horizon: f64,
    n_values: &[usize],
    x0: &[f64],
    ens: &EnsembleConfig,
    master_seed: u64,
) -> Result<Vec<(usize, MomentReport)>> {
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("step counts of a sweep must be strictly increasing".into()));
    }
    n_values
        .iter()
        .map(|&n| {
            let cfg = EmConfig::new(horizon, n, x0.to_vec(), derive_seed(master_seed, n as u64))?;
            Ok((n, run_ensemble(model, &cfg, ens)?))
        })
        .collect()
}
