use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use emlab_cli::config::{RawConfig, RunConfig};
use emlab_cli::experiments::{self, RunOutput};
use emlab_cli::output::{version_string, write_artifacts, Artifact, Manifest};

#[derive(Parser)]
#[command(name = "emlab", version, about = "Euler-Maruyama moment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap the worker pool; falls back to EMLAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the output directory of the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its CSV files and manifest.
    Run { config: PathBuf },
    /// Print the condition table of a regime_check or event_check config.
    Regime { config: PathBuf },
    /// Run the blow-up event checks of a regime config.
    EventCheck { config: PathBuf },
}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    match flag {
        Some(n) => Ok(n),
        None => match std::env::var("EMLAB_THREADS") {
            Ok(v) => v.trim().parse().with_context(|| format!("EMLAB_THREADS = `{v}` is not a count")),
            Err(_) => Ok(0),
        },
    }
}

fn load(path: &Path, cli: &Cli) -> Result<(RawConfig, RunConfig)> {
    let raw = RawConfig::load(path)?;
    let mut cfg = RunConfig::from_raw(&raw).with_context(|| format!("invalid config {}", path.display()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.output {
        cfg.output = o.clone();
    }
    Ok((raw, cfg))
}

fn manifest(path: &Path, raw: &RawConfig, cfg: &RunConfig, threads: usize, secs: f64) -> Artifact {
    let mut entries = vec![
        ("config_path".to_string(), path.display().to_string()),
        ("experiment".to_string(), cfg.experiment.name().to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("version".to_string(), version_string()),
        ("threads".to_string(), threads.to_string()),
        ("wall_time_s".to_string(), format!("{secs:.3}")),
    ];
    entries.extend(raw.iter().map(|(k, v)| (format!("config.{k}"), v.to_string())));
    Artifact { name: "manifest.txt".into(), contents: Manifest { entries }.render() }
}

fn execute(cli: &Cli) -> Result<bool> {
    let threads = thread_count(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    match &cli.command {
        Command::Regime { config } => {
            let (_, cfg) = load(config, cli)?;
            let settings = experiments::regime_settings(&cfg)?;
            print!("{}", pool.install(|| experiments::regime_report(settings))?);
            Ok(true)
        }
        Command::Run { config } | Command::EventCheck { config } => {
            let (raw, cfg) = load(config, cli)?;
            let start = Instant::now();
            let out: RunOutput = pool.install(|| match &cli.command {
                Command::EventCheck { .. } => experiments::regime_settings(&cfg)
                    .map_err(anyhow::Error::from)
                    .and_then(|s| experiments::event_check(s, cfg.seed).map_err(anyhow::Error::from)),
                _ => experiments::run(&cfg).map_err(anyhow::Error::from),
            })?;
            let mut artifacts = out.artifacts;
            artifacts.push(manifest(config, &raw, &cfg, pool.current_num_threads(), start.elapsed().as_secs_f64()));
            write_artifacts(&cfg.output, &artifacts)?;
            print!("{}", out.summary);
            println!("wrote {} files to {}", artifacts.len(), cfg.output.display());
            Ok(!out.summary.contains("FAIL"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
