//! `cvqkd`: finite-key rates, parameter sweeps and protocol simulation.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqkd::harness::{optimize_parameters, selftest, simulate, sweep, write_sweep_csv, StatsCache};
use cvqkd::{AttackMode, Error, ScenarioConfig};

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "Finite-key key rates for squeezed-state CV-QKD")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; missing fields take the default scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Attack model.
    #[arg(long, global = true, value_parser = parse_attack)]
    attack: Option<AttackMode>,
    /// Master seed for simulations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimized key rate at a single block length.
    Rate {
        /// Sifted rounds N.
        #[arg(long)]
        rounds: Option<u64>,
        /// Channel loss fraction.
        #[arg(long)]
        loss: Option<f64>,
    },
    /// Optimized rates along the configured sweep axis, as CSV.
    Sweep,
    /// Simulate one protocol run and write a JSON report.
    Simulate {
        #[arg(long, default_value_t = 10_000)]
        rounds: u64,
        /// Include the final key (hex) in the report.
        #[arg(long)]
        emit_key: bool,
        /// Override the abort threshold.
        #[arg(long)]
        d0: Option<f64>,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

fn parse_attack(s: &str) -> Result<AttackMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(common: &Common) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(a) = common.attack {
        cfg.attack = a;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Rate { rounds, loss } => {
            if let Some(l) = loss {
                cfg.channel.loss = l;
            }
            cfg.validate()?;
            let n = rounds.unwrap_or(cfg.rounds);
            let result = optimize_parameters(n, &cfg, &StatsCache::new())?;
            let mut text = serde_json::to_vec_pretty(&result)?;
            text.push(b'\n');
            emit(&cli.common.out, &text)?;
        }
        Command::Sweep => {
            let points = sweep(&cfg, &StatsCache::new())?;
            let mut buf = Vec::new();
            write_sweep_csv(&points, &mut buf)?;
            emit(&cli.common.out, &buf)?;
        }
        Command::Simulate { rounds, emit_key, d0 } => {
            if d0.is_some() {
                cfg.simulation.d0 = d0;
            }
            let report = simulate(&cfg, rounds, cfg.seed, emit_key)?;
            let mut text = report.to_json().into_bytes();
            text.push(b'\n');
            emit(&cli.common.out, &text)?;
        }
        Command::Selftest => {
            let checks = selftest();
            let mut text = String::new();
            for c in &checks {
                text.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            emit(&cli.common.out, text.as_bytes())?;
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
