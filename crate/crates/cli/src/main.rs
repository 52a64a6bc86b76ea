//! Command-line front end: runs one pipeline from a TOML configuration and writes a
//! JSON report with its artifacts.
//!
//! Exit codes: 0 pass, 1 numerical-check failure, 2 configuration error, 3 convergence failure.

mod config;
mod pipelines;
mod plots;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use stablekernel::report::{Artifact, Provenance, RunReport, Status};

use config::{Pipeline, RunConfig};
use pipelines::Context;

/// A problem with the configuration or command line (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser, Debug)]
#[command(name = "stablekernel", version, about = "Heat kernels of non-symmetric stable-like operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Shipped model preset (replaces the `[model]` table).
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frozen-coefficient density by Fourier inversion.
    Density,
    /// Heat kernel by the parametrix series.
    Parametrix,
    /// Heat kernel with drift by the perturbation series.
    Drift,
    /// Monte Carlo simulation checked against a constructed density.
    Mc,
    /// All checks for a preset, or the numbered acceptance criteria without one.
    Verify {
        /// Run only these criteria (repeatable).
        #[arg(long = "criterion")]
        criteria: Vec<usize>,
    },
    /// Re-renders the plot CSVs of an existing JSON report.
    Report {
        /// Path of a `report.json`.
        input: PathBuf,
    },
}

enum Outcome {
    Pass,
    CheckFailure,
}

/// Exit code and error kind of a failed run.
fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    use stablekernel::Error as E;
    if e.downcast_ref::<ConfigError>().is_some() {
        return (2, "configuration");
    }
    match e.downcast_ref::<E>() {
        Some(E::Convergence(_)) => (3, "convergence"),
        Some(E::Quadrature { .. }) => (3, "quadrature"),
        Some(E::NonFinite { .. }) => (3, "non_finite"),
        Some(E::ModelViolation(_)) => (2, "model_violation"),
        Some(E::Domain(_)) => (2, "domain"),
        Some(E::Io(_)) => (2, "io"),
        Some(_) => (2, "configuration"),
        None if e.downcast_ref::<std::io::Error>().is_some() => (2, "io"),
        None => (2, "configuration"),
    }
}

fn load_config(cli: &Cli, pipeline: Pipeline) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(p) = cfg.pipeline {
        if p != pipeline {
            return Err(ConfigError(format!(
                "the config selects pipeline `{}` but the command is `{}`",
                p.name(),
                pipeline.name()
            ))
            .into());
        }
    }
    cfg.pipeline = Some(pipeline);
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(p) = &cli.preset {
        cfg.model = config::ModelConfig { preset: Some(p.clone()), ..Default::default() };
    }
    Ok(cfg)
}

fn write_report(report: &RunReport, out: &Path) -> Result<serde_json::Value> {
    let text = report.to_json()?;
    let path = out.join("report.json");
    fs::write(&path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    plots::render(&value, out)?;
    Ok(value)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let (pipeline, criteria) = match &cli.command {
        Command::Report { input } => {
            let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", input.display())))?;
            let out = cli.out.clone().unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).to_path_buf());
            for p in plots::render(&value, &out)? {
                println!("{}", p.display());
            }
            return Ok(if value["status"] == "fail" { Outcome::CheckFailure } else { Outcome::Pass });
        }
        Command::Density => (Pipeline::Density, vec![]),
        Command::Parametrix => (Pipeline::Parametrix, vec![]),
        Command::Drift => (Pipeline::Drift, vec![]),
        Command::Mc => (Pipeline::Mc, vec![]),
        Command::Verify { criteria } => (Pipeline::Verify, criteria.clone()),
    };
    let cfg = load_config(cli, pipeline)?;
    if cfg.threads > 0 {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let has_model = cfg.model != config::ModelConfig::default();
    let spec = if has_model || pipeline != Pipeline::Verify {
        Some(cfg.model.build().map_err(ConfigError)?)
    } else {
        None
    };
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;

    let provenance = Provenance {
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        pipeline: pipeline.name().to_string(),
        preset: cfg.model.preset.clone(),
        seed: cfg.seed,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    let out = cfg.out.clone();
    let mut ctx = Context { cfg: &cfg, spec, label: cfg.model.label(), out: &out, report: RunReport::new(provenance) };
    let config_path = out.join("config.toml");
    fs::write(&config_path, cfg.to_toml()).with_context(|| format!("writing {}", config_path.display()))?;
    ctx.report.artifacts.push(Artifact { kind: "config".into(), path: "config.toml".into() });

    match pipeline {
        Pipeline::Density => pipelines::density(&mut ctx)?,
        Pipeline::Parametrix => pipelines::parametrix(&mut ctx)?,
        Pipeline::Drift => pipelines::drift(&mut ctx)?,
        Pipeline::Mc => pipelines::mc(&mut ctx)?,
        Pipeline::Verify => {
            pipelines::verify(&mut ctx, &criteria)?;
        }
    }
    for name in ["density_slices", "ratio_heatmap", "term_decay", "constants", "criteria"] {
        ctx.report.artifacts.push(Artifact { kind: "plot_csv".into(), path: format!("plots/{name}.csv") });
    }
    ctx.report.finalize();
    write_report(&ctx.report, &out)?;

    for r in &ctx.report.reports {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Info => "info",
        };
        let consts: Vec<String> = r.constants.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
        println!("{status:>4} {} [{}]", r.id, consts.join(", "));
    }
    println!("report: {}", out.join("report.json").display());
    Ok(if ctx.report.status == Status::Fail { Outcome::CheckFailure } else { Outcome::Pass })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailure) => ExitCode::from(1),
        Err(e) => {
            let (code, kind) = classify(&e);
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            let body = json!({ "error": { "kind": kind, "message": chain.join(": "), "exit_code": code } });
            eprintln!("{}", serde_json::to_string_pretty(&body).expect("error serializes"));
            ExitCode::from(code)
        }
    }
}
