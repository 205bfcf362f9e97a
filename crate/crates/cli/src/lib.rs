//! Experiment runner behind the `steinlab` binary: configuration, the
//! subcommands, CSV/JSON artifacts and the invariant self-test.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::path::Path;

use anyhow::{Context, Result};
use steinlab::Budget;

use config::ExperimentConfig;
use output::{Artifacts, Manifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Exponent,
    Divergence,
    Coherence,
    MutualInfo,
    Chernoff,
    Cqmi { theta_sweep: bool },
    Monotonicity,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exponent => "exponent",
            Command::Divergence => "divergence",
            Command::Coherence => "coherence",
            Command::MutualInfo => "mutual-info",
            Command::Chernoff => "chernoff",
            Command::Cqmi { theta_sweep: false } => "cqmi",
            Command::Cqmi { theta_sweep: true } => "cqmi --theta-sweep",
            Command::Monotonicity => "monotonicity",
            Command::Selftest => "selftest",
        }
    }
}

/// Runs one command into `cfg.output` and writes the manifest. Returns
/// whether every checked inequality held.
pub fn run(command: Command, cfg: &ExperimentConfig, inject: &[String]) -> Result<bool> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().context("building worker pool")?;
    let mut art = Artifacts::new(&cfg.output)?;
    let passed = pool.install(|| -> Result<bool> {
        Ok(match command {
            Command::Exponent => commands::exponent(cfg, &mut art)?,
            Command::Divergence => commands::divergence(cfg, &mut art)?,
            Command::Coherence => commands::coherence(cfg, &mut art)?,
            Command::MutualInfo => commands::mutual_info(cfg, &mut art)?,
            Command::Chernoff => commands::chernoff_cmd(cfg, &mut art)?,
            Command::Cqmi { theta_sweep } => commands::cqmi(cfg, &mut art, theta_sweep)?,
            Command::Monotonicity => commands::monotonicity(cfg, &mut art)?,
            Command::Selftest => {
                let results = selftest::run(cfg.seed, inject)?;
                selftest::write(&results, &mut art)?
            }
        })
    })?;
    art.finish(&Manifest {
        tool: "steinlab",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        seed: cfg.seed,
        workers: cfg.workers,
        budget_max_dim: Budget::from_env().max_dim,
        config: cfg,
        tolerances: output::tolerances(),
        defaults: output::module_defaults(),
    })?;
    Ok(passed)
}

/// Loads `path` if given, else the defaults (state files resolve against
/// the working directory).
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}
