//! Experiment orchestration. Every function here returns artifacts in
//! memory; writing them is the caller's job.

use std::f64::consts::LN_10;
use std::fmt::Write as _;

use emlab_core::constants::StableParams;
use emlab_core::dynamics::EmConfig;
use emlab_core::montecarlo::{run_ensemble, sweep_blowup, EnsembleConfig, ModelSpec};
use emlab_core::noise::derive_seed;
use emlab_core::theory::{
    build_event, certify_regime, check_claim, conditioned_moment_lower_bound, estimate_event_probability,
    event_probability_bound_stable, event_probability_exact, explicit_lower_bound, smallest_valid_n,
    stable_window_check, RegimeCertificate, RegimeKind,
};
use thiserror::Error;

use crate::config::{Experiment, RegimeSettings, RunConfig, FIG1_X0, TABLE_STEPS};
use crate::output::{
    display_value, format_value, key_value_csv, moment_csv, sweep_csv, trace_csv, Artifact, OutputError,
};

/// Annulus radii probed by the stable window check.
pub const WINDOW_Z: [f64; 4] = [1.5, 2.0, 4.0, 8.0];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] emlab_core::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("experiment `{0}` has no regime to report")]
    NoRegime(&'static str),
}

type Result<T> = std::result::Result<T, RunError>;

/// Artifacts of one run plus a short text summary for the terminal.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

fn x0_label(x: f64) -> String {
    let s = format!("{x}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s).replace('.', "p")
}

fn moment_artifacts(stem: &str, rep: &emlab_core::montecarlo::MomentReport) -> Result<Vec<Artifact>> {
    let mut out = vec![Artifact { name: format!("{stem}.csv"), contents: moment_csv(rep)? }];
    if !rep.traces.is_empty() {
        out.push(Artifact { name: format!("{stem}_traces.csv"), contents: trace_csv(rep)? });
    }
    Ok(out)
}

/// Brownian critical scheme at every pinned start, `n = 10 000`.
fn figure(name: &str, horizon: f64, seed: u64, ens: &EnsembleConfig) -> Result<RunOutput> {
    let model = ModelSpec::brownian_critical(1)?;
    let mut artifacts = Vec::new();
    let mut summary = String::new();
    for (i, &x0) in FIG1_X0.iter().enumerate() {
        let cfg = EmConfig::new(horizon, 10_000, vec![x0], derive_seed(seed, i as u64))?;
        let rep = run_ensemble(&model, &cfg, ens)?;
        let peak = rep.records.iter().map(|r| r.moments[0]).fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            summary,
            "{name} x0={x0}: E|Y_0|^2 = {}, E|Y_n|^2 = {}, max = {}",
            format_value(rep.records[0].moments[0]),
            format_value(rep.final_record().moments[0]),
            format_value(peak)
        );
        artifacts.extend(moment_artifacts(&format!("{name}_x0_{}", x0_label(x0)), &rep)?);
    }
    Ok(RunOutput { artifacts, summary })
}

fn table(alpha: f64, x0: f64, seed: u64, ens: &EnsembleConfig) -> Result<RunOutput> {
    let model = ModelSpec::pareto_critical(StableParams::heavy_tailed(1, alpha)?)?;
    let sweep = sweep_blowup(&model, 100.0, &TABLE_STEPS, &[x0], ens, seed)?;
    let contents = sweep_csv(&sweep)?;
    let mut summary = String::new();
    for (n, rep) in &sweep {
        let row: Vec<String> = rep.final_record().moments.iter().map(|&m| format_value(m)).collect();
        let _ = writeln!(summary, "n={n}: {}", row.join(" "));
    }
    Ok(RunOutput {
        artifacts: vec![Artifact { name: format!("table_alpha_{}.csv", x0_label(alpha)), contents }],
        summary,
    })
}

/// `ln P(event)`: exact for Pareto kinds, heat-kernel bound otherwise.
fn ln_event_probability(cert: &RegimeCertificate) -> Result<f64> {
    let ev = build_event(cert)?;
    Ok(if ev.kind.is_pareto() { event_probability_exact(&ev)? } else { event_probability_bound_stable(cert, &ev)? })
}

fn kind_label(kind: RegimeKind) -> &'static str {
    match kind {
        RegimeKind::CriticalStable => "critical drift, stable noise",
        RegimeKind::CriticalPareto => "critical drift, Pareto noise",
        RegimeKind::PolynomialStable => "polynomial drift, stable noise",
        RegimeKind::PolynomialPareto => "polynomial drift, Pareto noise",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(display_value).unwrap_or_else(|| "-".into())
}

/// Human-readable condition table with the derived constants.
pub fn regime_report(settings: &RegimeSettings) -> Result<String> {
    let input = &settings.input;
    let cert = certify_regime(input)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "regime: {} (d = {}, alpha = {}, beta = {}, T = {}, n = {}, eta = {})",
        kind_label(input.kind),
        input.params.d,
        input.params.alpha,
        input.beta,
        input.horizon,
        input.steps,
        cert.eta
    );
    let _ =
        writeln!(s, "heat-kernel constant K(d, alpha) = {} (checks using delta are conditional on it)", input.k_heat);
    let width = cert.conditions.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let _ = writeln!(s, "{:<width$}  {:>16}  {:>16}  result", "condition", "lhs", "rhs");
    for c in &cert.conditions {
        let _ = writeln!(
            s,
            "{:<width$}  {:>16}  {:>16}  {}",
            c.name,
            display_value(c.lhs),
            display_value(c.rhs),
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "noise scale s = {}", display_value(cert.noise_scale));
    let _ = writeln!(s, "annulus constant c = {}", display_value(cert.annulus));
    let _ = writeln!(s, "K = {}", opt(cert.k_const));
    let _ = writeln!(s, "r_n = {}", opt(cert.r_n));
    let _ = writeln!(s, "M = {}", opt(cert.m_const));
    if cert.valid() {
        let ln_p = ln_event_probability(&cert)?;
        let label = if input.kind.is_pareto() { "exact" } else { "lower bound" };
        let _ = writeln!(s, "log10 P(event) ({label}) = {}", display_value(ln_p / LN_10));
        let _ = writeln!(s, "log10 explicit bound = {}", display_value(explicit_lower_bound(&cert)? / LN_10));
        let _ = writeln!(s, "moment lower bound growth rate per step = {}", opt(cert.growth_rate));
    } else {
        let _ = writeln!(s, "certificate invalid; failing: {}", cert.failing().join("; "));
    }
    match smallest_valid_n(input, settings.n_max)? {
        Some(n) => {
            let _ = writeln!(s, "smallest valid n <= {}: {n}", settings.n_max);
        }
        None => {
            let _ = writeln!(s, "smallest valid n <= {}: none", settings.n_max);
        }
    }
    Ok(s)
}

/// Claim check, event probabilities and, for stable kinds, the annulus
/// window check.
pub fn event_check(settings: &RegimeSettings, seed: u64) -> Result<RunOutput> {
    let cert = certify_regime(&settings.input)?;
    let ev = build_event(&cert)?;
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
    push("kind", kind_label(ev.kind).into());
    push("n", ev.n.to_string());
    push("ln_threshold", format_value(ev.ln_threshold));
    push("ln_first_radius", format_value(ev.ln_first_radius()));
    push("window_lo", format_value(ev.window.lo));
    push("window_hi", format_value(ev.window.hi));
    let ln_bound = explicit_lower_bound(&cert)?;
    push("ln_explicit_bound", format_value(ln_bound));
    let mut all_pass = true;
    if ev.kind.is_pareto() {
        let exact = event_probability_exact(&ev)?;
        push("ln_p_exact", format_value(exact));
        push("exact_ge_bound", (exact >= ln_bound).to_string());
        all_pass &= exact >= ln_bound;
        let f = estimate_event_probability(&ev, settings.draws, derive_seed(seed, 1))?;
        // standard error under the exact probability; the empirical one is
        // zero whenever no draw hits, which is the norm for long events
        let p = exact.exp();
        let agree = (f.p - p).abs() <= 4.0 * (p * (1.0 - p) / f.draws as f64).sqrt();
        push("draws", f.draws.to_string());
        push("hits", f.hits.to_string());
        push("p_estimate", format_value(f.p));
        push("p_std_error", format_value(f.std_error));
        push("p_exact", format_value(exact.exp()));
        push("estimate_within_4se", agree.to_string());
        all_pass &= agree;
    } else {
        push("ln_p_lower_bound", format_value(event_probability_bound_stable(&cert, &ev)?));
        let p = StableParams::heavy_tailed(ev.d, ev.alpha)?;
        for w in stable_window_check(p, settings.input.k_heat, &WINDOW_Z, settings.draws, derive_seed(seed, 2))? {
            push(&format!("window_z{}_frequency", w.z), format_value(w.frequency.p));
            push(&format!("window_z{}_bound", w.z), format_value(w.lower_bound));
            push(&format!("window_z{}_pass", w.z), w.pass.to_string());
            all_pass &= w.pass;
        }
    }
    let claim = check_claim(&cert, &ev, settings.claim_paths, derive_seed(seed, 3))?;
    push("claim_paths", claim.paths.to_string());
    push("claim_held", claim.held.to_string());
    push("claim_min_ln_margin", format_value(claim.min_margin));
    all_pass &= claim.held == claim.paths;
    let mb = conditioned_moment_lower_bound(&cert, &ev)?;
    push("ln_moment_lower_bound", format_value(mb.ln_bound));
    push("growth_rate", mb.growth_rate.map(format_value).unwrap_or_else(|| "nan".into()));
    push("all_pass", all_pass.to_string());
    let summary = format!(
        "claim held on {}/{} paths, min ln margin {}; all checks {}\n",
        claim.held,
        claim.paths,
        format_value(claim.min_margin),
        if all_pass { "pass" } else { "FAIL" }
    );
    Ok(RunOutput {
        artifacts: vec![Artifact { name: "event_check.csv".into(), contents: key_value_csv(&rows)? }],
        summary,
    })
}

/// Runs the configured experiment.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let ens = &cfg.ensemble;
    match &cfg.experiment {
        Experiment::Fig1 => figure("fig1", 10.0, cfg.seed, ens),
        Experiment::Fig2 => figure("fig2", 100.0, cfg.seed, ens),
        Experiment::Table { alpha, x0 } => table(*alpha, *x0, cfg.seed, ens),
        Experiment::RegimeCheck(r) => {
            let report = regime_report(r)?;
            Ok(RunOutput {
                artifacts: vec![Artifact { name: "regime.txt".into(), contents: report.clone() }],
                summary: report,
            })
        }
        Experiment::EventCheck(r) => event_check(r, cfg.seed),
        Experiment::Custom(c) => {
            let em = EmConfig::new(c.horizon, c.steps, c.x0.clone(), cfg.seed)?;
            let rep = run_ensemble(&c.model, &em, ens)?;
            let summary = format!(
                "custom: final moments {}\n",
                rep.final_record().moments.iter().map(|&m| format_value(m)).collect::<Vec<_>>().join(" ")
            );
            Ok(RunOutput { artifacts: moment_artifacts("custom", &rep)?, summary })
        }
    }
}

/// Regime settings of a config, for the `regime` and `event-check` commands.
pub fn regime_settings(cfg: &RunConfig) -> Result<&RegimeSettings> {
    match &cfg.experiment {
        Experiment::RegimeCheck(r) | Experiment::EventCheck(r) => Ok(r),
        other => Err(RunError::NoRegime(other.name())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    fn parse(text: &str) -> RunConfig {
        RunConfig::from_raw(&RawConfig::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn reference_regime_report() {
        let cfg = parse("experiment = regime_check\nalpha = 1\nbeta = 0.5\nhorizon = 100\nsteps = 200\nn_max = 300");
        let s = regime_report(regime_settings(&cfg).unwrap()).unwrap();
        assert!(!s.contains("FAIL"), "{s}");
        assert!(s.contains("K = 1.11742"), "{s}");
        assert!(s.contains("smallest valid n <= 300: 100"), "{s}");
    }

    #[test]
    fn large_step_fails_first_condition() {
        let cfg = parse("experiment = regime_check\nalpha = 1\nbeta = 0.5\nhorizon = 100\nsteps = 50\nn_max = 10");
        let s = regime_report(regime_settings(&cfg).unwrap()).unwrap();
        let first = s.lines().nth(3).unwrap();
        assert!(first.starts_with("step size T/n <= 1") && first.ends_with("FAIL"), "{s}");
        assert!(s.contains("smallest valid n <= 10: none"));
    }

    #[test]
    fn small_custom_run() {
        let mut cfg =
            parse("experiment = custom\nhorizon = 1\nsteps = 8\nx0 = 1\npaths = 64\nrecord_every = 4\ntrace_paths = 2");
        cfg.seed = 5;
        let out = run(&cfg).unwrap();
        let names: Vec<_> = out.artifacts.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["custom.csv", "custom_traces.csv"]);
        assert_eq!(out.artifacts[0].contents.lines().count(), 4);
        assert_eq!(out.artifacts[1].contents.lines().next().unwrap(), "k,path_0,path_1");
    }

    #[test]
    fn event_check_cubic() {
        let cfg = parse(
            "experiment = event_check\nregime = polynomial\ndrift = power:2\nalpha = 1\nbeta = 0.5\n\
             horizon = 2\nsteps = 2\ngamma = 3\nlambda = 1.5\nh = 1\ndraws = 200000\nclaim_paths = 50",
        );
        let out = event_check(regime_settings(&cfg).unwrap(), 3).unwrap();
        assert!(out.artifacts[0].contents.contains("all_pass,true"), "{}", out.artifacts[0].contents);
    }

    #[test]
    fn figures_have_no_regime() {
        let cfg = parse("experiment = fig1");
        assert!(matches!(regime_settings(&cfg), Err(RunError::NoRegime("fig1"))));
    }
}
