//! `clkan` — experiment runner for Clifford Kolmogorov-Arnold networks.
//!
//! Subcommands: `run` / `sweep` (train from a TOML config), `verify`
//! (fast invariant suite), `param-count`, `gen-data`, and `plot`.

pub mod checkpoint;
pub mod config;
pub mod plot;
pub mod runner;
pub mod verify;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use clkan::data::{gen_formula, Task};
use clkan::network::param_count;
use clkan::Signature;

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "clkan", version, about = "Clifford KAN experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment(s) described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides config and CLKAN_OUT_DIR).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the sweep section of a config (alias of `run`; requires [sweep]).
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the fast self-verification suite.
    Verify,
    /// Print the exact parameter count of the model in a config.
    ParamCount { config: PathBuf },
    /// Generate a dataset CSV: one row per sample, inputs then target.
    GenData {
        task: String,
        /// Signature as p,q,r (e.g. 0,1,0).
        signature: String,
        n: usize,
        seed: u64,
        out: PathBuf,
    },
    /// Collect result records into a grid-size-vs-MSE plot data file.
    Plot {
        records: Vec<PathBuf>,
        #[arg(long, default_value = "plot.csv")]
        out: PathBuf,
    },
}

fn parse_signature(s: &str) -> Result<Signature> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("signature `{s}` is not of the form p,q,r"))?;
    if parts.len() != 3 {
        bail!("signature `{s}` is not of the form p,q,r");
    }
    Ok(Signature::new(parts[0], parts[1], parts[2]))
}

fn gen_data_csv(task: &str, signature: &str, n: usize, seed: u64, out: &PathBuf) -> Result<()> {
    let task = Task::parse(task)?;
    let sig = parse_signature(signature)?;
    let ds = gen_formula(task, sig, n, seed)?;
    let (arity, dim) = (ds.arity, ds.dim);

    let mut csv = String::new();
    for j in 0..arity {
        for c in 0..dim {
            csv.push_str(&format!("x{j}_{c},"));
        }
    }
    csv.push_str(
        &(0..dim)
            .map(|c| format!("y_{c}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    csv.push('\n');
    for i in 0..ds.len() {
        for v in &ds.inputs[i * arity * dim..(i + 1) * arity * dim] {
            csv.push_str(&format!("{v:.17e},"));
        }
        let row: Vec<String> = ds.targets[i * dim..(i + 1) * dim]
            .iter()
            .map(|v| format!("{v:.17e}"))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    runner::write_atomic(out, csv.as_bytes())?;
    println!("wrote {n} samples of `{}` to {}", ds.task.name(), out.display());
    Ok(())
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out_dir } => {
            let config = ExperimentConfig::load(&config)?;
            runner::run(&config, out_dir.as_deref())?;
        }
        Command::Sweep { config, out_dir } => {
            let config = ExperimentConfig::load(&config)?;
            if config.sweep.is_none() {
                bail!("`sweep` needs a [sweep] section in the config");
            }
            runner::run(&config, out_dir.as_deref())?;
        }
        Command::Verify => verify::verify()?,
        Command::ParamCount { config } => {
            let config = ExperimentConfig::load(&config)?;
            for (kind, points) in config.grid_combinations() {
                let (model, _) = config.resolve(kind, points);
                println!("{kind:?}-{points}: {}", param_count(&model)?);
            }
        }
        Command::GenData {
            task,
            signature,
            n,
            seed,
            out,
        } => gen_data_csv(&task, &signature, n, seed, &out)?,
        Command::Plot { records, out } => {
            let paths: Vec<&std::path::Path> = records.iter().map(|p| p.as_path()).collect();
            plot::plot(&paths, &out)?;
        }
    }
    Ok(())
}
