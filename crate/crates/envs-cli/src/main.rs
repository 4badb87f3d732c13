use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use envs_cli::{load_env, oracle_csv, parse_seeds, run_experiment, ExperimentConfig, OracleQuantity, RunOptions};

#[derive(Parser)]
#[command(name = "successor-lab", version, about = "Successor-state experiments on finite reward processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config for every seed.
    Run {
        config: PathBuf,
        /// Seed list: `a..b` (both ends included), `a..=b` or `a,b,c`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; SUCCESSOR_LAB_THREADS caps this.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Environment utilities.
    Env {
        #[command(subcommand)]
        action: EnvAction,
    },
    /// Print an exact quantity of an environment as CSV.
    Oracle {
        env: String,
        /// M, V or spectrum.
        #[arg(long, default_value = "M")]
        what: String,
    },
}

#[derive(Subcommand)]
enum EnvAction {
    /// Print the reward process as JSON (MDPs under the uniform policy).
    Dump {
        spec: String,
        /// Print the MDP itself instead.
        #[arg(long)]
        mdp: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, seeds, out, parallel } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let opts = RunOptions { out_dir: out, seeds: seeds.as_deref().map(parse_seeds).transpose()?, parallel };
            let manifest = run_experiment(&cfg, &opts)?;
            for r in &manifest.seeds {
                match &r.error {
                    None => println!("seed {}: ok ({} ms) {}", r.seed, r.wall_ms, r.files.join(" ")),
                    Some(e) => eprintln!("seed {}: FAILED: {e}", r.seed),
                }
            }
            Ok(if manifest.succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Env { action: EnvAction::Dump { spec, mdp } } => {
            let env = load_env(&spec)?;
            match (&env, mdp) {
                (envs_cli::Env::Mdp(_), true) => println!("{}", env.to_json()),
                (_, true) => anyhow::bail!("{spec} is not an MDP"),
                _ => println!("{}", mrp_core::io::mrp_to_json(&env.to_mrp()?)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { env, what } => {
            let quantity: OracleQuantity = what.parse()?;
            print!("{}", oracle_csv(&load_env(&env)?, quantity)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
