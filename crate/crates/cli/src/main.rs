use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dclag_core::scenario::{analyze, parse_config_with, run_scenario, write_outputs, ConfigError, ScenarioConfig};

/// Discrete controlled-Lagrangian experiments for the cart-pendulum.
///
/// Exit status: 0 when every verdict passes, 1 on a numerical failure or a
/// failed verdict, 2 on a configuration error.
#[derive(Parser, Debug)]
#[command(name = "dclag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for the optional sensing noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write trajectory.csv, summary.json and config.txt
    /// (plus forces.csv for the digital-controller modes).
    Run { config: PathBuf },
    /// Run a scenario once per value of one key, each into `<out>/<key>=<value>`.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<String>,
    },
    /// Evaluate the stability predicates without simulating.
    Analyze { config: PathBuf },
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

/// Greek spellings accepted by `--key`.
fn canonical_key(key: &str) -> &str {
    match key {
        "κ" => "kappa",
        "ρ" => "rho",
        "ε" => "epsilon",
        "ψ" => "psi",
        "φ0" => "phi0",
        other => other,
    }
}

fn load(path: &Path, overrides: &[(&str, &str)], seed: u64) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    let mut cfg = parse_config_with(&text, overrides).map_err(|e| Failure::Config(anyhow::Error::new(e).context(path.display().to_string())))?;
    cfg.seed = seed;
    Ok(cfg)
}

/// Runs one scenario into `dir`; returns whether all verdicts passed.
fn run_one(cfg: &ScenarioConfig, dir: &Path) -> Result<bool, Failure> {
    eprint!("{}", cfg.echo());
    let outcome = run_scenario(cfg).map_err(numerical)?;
    write_outputs(&outcome, dir).map_err(numerical)?;
    println!("{}", serde_json::to_string(&outcome.summary).map_err(numerical)?);
    if let Some(f) = &outcome.summary.failure {
        eprintln!("solver failure at step {}: {}", f.step, f.message);
    }
    for v in outcome.summary.verdicts.iter().filter(|v| !v.pass) {
        eprintln!("verdict {} failed: {}", v.name, v.detail);
    }
    Ok(outcome.summary.passed())
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, &[], cli.seed)?;
            run_one(&cfg, &cli.out)
        }
        Command::Sweep { config, key, values } => {
            let key = canonical_key(key);
            let configs = values
                .iter()
                .map(|v| load(config, &[(key, v.as_str())], cli.seed).map(|c| (v, c)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut all = true;
            for (value, cfg) in &configs {
                all &= run_one(cfg, &cli.out.join(format!("{key}={value}")))?;
            }
            Ok(all)
        }
        Command::Analyze { config } => {
            let cfg = load(config, &[], cli.seed)?;
            eprint!("{}", cfg.echo());
            let analysis = analyze(&cfg).map_err(numerical)?;
            println!("{}", serde_json::to_string_pretty(&analysis).map_err(numerical)?);
            Ok(analysis.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}
