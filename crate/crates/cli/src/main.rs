use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use mml::commands;
use mml::config::{Command, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "mml", version, about = "Adam descent-ascent experiments on zero-sum games")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write an SVG rendering of sweeps
    #[arg(long, global = true)]
    svg: bool,
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Catalog game id
    #[arg(long, global = true)]
    game: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Run Adam-DA and write the trajectory
    Simulate,
    /// Adam-DA against continuous Adam-DA and the sign-GDA flow
    Compare,
    /// Step-size thresholds from the Jacobian spectrum
    Threshold,
    /// (beta, h) convergence map
    Heatmap,
    /// (eps, h) convergence map
    EpsSweep,
    /// Local error order of the continuous models
    ErrorOrder,
    /// Averaged gradient norms over a (beta, rho) grid
    Igr,
    /// Invariant battery and acceptance criteria
    Selftest,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Compare => Command::Compare,
            Cmd::Threshold => Command::Threshold,
            Cmd::Heatmap => Command::Heatmap,
            Cmd::EpsSweep => Command::EpsSweep,
            Cmd::ErrorOrder => Command::ErrorOrder,
            Cmd::Igr => Command::Igr,
            Cmd::Selftest => Command::Selftest,
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("MML_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("MML_THREADS must be a non-negative integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure the worker pool")?;
    Ok(())
}

fn execute(cli: Cli) -> Result<usize> {
    init_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let command: Command = cli.command.into();
    if let Some(file_cmd) = cfg.command {
        if file_cmd != command {
            eprintln!("note: running '{}' although the configuration names '{}'", command.name(), file_cmd.name());
        }
    }
    cfg.apply(&Overrides {
        game: cli.game,
        h: cli.h,
        beta: cli.beta,
        rho: cli.rho,
        eps: cli.eps,
        steps: cli.steps,
        seed: cli.seed,
        out: cli.out,
        svg: cli.svg,
    });
    let resolved = cfg.resolve(command)?;
    let outcome = commands::run(&resolved)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.failures)
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(core) = e.chain().find_map(|c| c.downcast_ref::<mml_core::Error>()) {
        return core.kind();
    }
    if e.chain().any(|c| c.is::<std::io::Error>()) {
        "io"
    } else if e.chain().any(|c| c.is::<toml::de::Error>()) {
        "config"
    } else {
        "invalid_input"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            let record = json!({ "error": { "kind": "selftest", "message": format!("{failures} checks failed") } });
            eprintln!("{record}");
            ExitCode::from(1)
        }
        Err(e) => {
            let record = json!({ "error": { "kind": error_kind(&e), "message": format!("{e:#}") } });
            eprintln!("{record}");
            ExitCode::from(2)
        }
    }
}
