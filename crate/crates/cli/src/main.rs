mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use crate::config::{ConfigError, ExperimentConfig};

/// Lift planar foliations through a distribution chart and measure holonomy
/// displacement.
///
/// Any configuration key can be overridden with `--section.key=value`, for
/// example `--chart.P='-y/2+z^2/10'` or `--run.r_list='[0.01,0.005]'`.
#[derive(Parser)]
#[command(name = "legendrian-lift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file. Without one the standard contact chart is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Holonomy of the exceptional divisor on the loops C and τ.
    Holonomy,
    /// Real center orbits, closure residual, ν and the real-form identity.
    Center,
    /// Connecting curves γ_r: endpoints, lengths and tangency.
    Gamma,
    /// Displacement scan over run.r_list with the Stokes cross-check.
    Displace,
    /// Accumulation of the loops γ_n on the transversal.
    Accumulate,
    /// The full acceptance suite.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Holonomy => "holonomy",
            Command::Center => "center",
            Command::Gamma => "gamma",
            Command::Displace => "displace",
            Command::Accumulate => "accumulate",
            Command::Selftest => "selftest",
        }
    }
}

const THREADS_ENV: &str = "LEGENDRIAN_LIFT_THREADS";

/// Split `--section.key=value` overrides from the arguments clap handles.
fn split_overrides(args: impl Iterator<Item = String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(body) if body.split('=').next().is_some_and(|k| k.contains('.')) => {
                overrides.push(body.to_string())
            }
            _ => rest.push(a),
        }
    }
    (rest, overrides)
}

fn run() -> anyhow::Result<bool> {
    let (args, overrides) = split_overrides(std::env::args());
    let cli = Cli::parse_from(args);
    if let Ok(n) = std::env::var(THREADS_ENV) {
        let n: usize = n
            .parse()
            .map_err(|_| ConfigError(format!("{THREADS_ENV} must be a positive integer, got `{n}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    let report = match cli.command {
        Command::Holonomy => commands::holonomy(&cfg)?,
        Command::Center => commands::center(&cfg)?,
        Command::Gamma => commands::gamma(&cfg)?,
        Command::Displace => commands::displace(&cfg)?,
        Command::Accumulate => commands::accumulate(&cfg)?,
        Command::Selftest => commands::selftest(&cfg)?,
    };
    let bytes = report.table.render(cli.command.name(), cfg.run.seed, &cfg)?;
    match &cfg.output.path {
        Some(p) => std::fs::write(p, &bytes).with_context(|| format!("writing {p}"))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    for note in &report.notes {
        eprintln!("{note}");
    }
    eprintln!("{}: {}", cli.command.name(), if report.passed { "pass" } else { "FAIL" });
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
