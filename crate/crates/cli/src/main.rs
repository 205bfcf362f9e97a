use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use steinlab_cli::{load_config, run, Command};

#[derive(Parser)]
#[command(name = "steinlab", version, about = "Quantum hypothesis-testing and recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated type-I error levels.
    #[arg(long, global = true, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV tables, reports and manifest.json.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimal type-II error and exponents of ρ^{⊗n} against a (mixture) alternative.
    Exponent,
    /// Relative entropy, Rényi, measured and Chernoff divergences of ρ and σ.
    Divergence,
    /// Coherence-testing exponents against incoherent states.
    Coherence,
    /// Testing ρ_AB against product states.
    MutualInfo,
    /// Composite Chernoff exponents.
    Chernoff,
    /// Recovery bounds on conditional mutual information.
    Cqmi {
        /// Sweep the built-in tripartite family over the configured θ grid.
        #[arg(long)]
        theta_sweep: bool,
    },
    /// Recovery-strengthened data processing for a configured channel.
    Monotonicity,
    /// Run the invariant suite.
    Selftest {
        /// Replace the named invariant's tolerance by −1 (must then fail).
        #[arg(long)]
        inject: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut cfg = load_config(cli.common.config.as_deref())?;
        let c = cli.common;
        if let Some(e) = c.epsilon {
            cfg.epsilon = e;
        }
        if let Some(n) = c.n_max {
            cfg.n_max = n;
        }
        if let Some(s) = c.seed {
            cfg.seed = s;
        }
        if let Some(o) = c.output {
            cfg.output = o;
        }
        if c.workers.is_some() {
            cfg.workers = c.workers;
        }
        let (command, inject) = match cli.command {
            Cmd::Exponent => (Command::Exponent, vec![]),
            Cmd::Divergence => (Command::Divergence, vec![]),
            Cmd::Coherence => (Command::Coherence, vec![]),
            Cmd::MutualInfo => (Command::MutualInfo, vec![]),
            Cmd::Chernoff => (Command::Chernoff, vec![]),
            Cmd::Cqmi { theta_sweep } => (Command::Cqmi { theta_sweep }, vec![]),
            Cmd::Monotonicity => (Command::Monotonicity, vec![]),
            Cmd::Selftest { inject } => (Command::Selftest, inject),
        };
        let passed = run(command, &cfg, &inject)?;
        anyhow::Ok((passed, cfg.output))
    })();
    match result {
        Ok((true, out)) => {
            println!("all checks passed; results in {}", out.display());
            ExitCode::SUCCESS
        }
        Ok((false, out)) => {
            eprintln!("some checks FAILED; see the *.report.json files in {}", out.display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
