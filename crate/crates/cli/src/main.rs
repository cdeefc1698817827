//! `crlab`: Fisher information, variance and Cramér-Rao products on grids.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure (details in
//! `diagnostics.jsonl` inside the output directory).

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use crlab_core::io::json_string;

use crate::commands::VerifyFailures;
use crate::config::{Algorithm, RunConfig};
use crate::output::Output;

#[derive(Parser, Debug)]
#[command(
    name = "crlab",
    version,
    about = "Fisher information and Cramér-Rao products on discretized domains"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Nodes per axis, comma separated; one value applies to every axis.
    #[arg(long, global = true, value_delimiter = ',', value_name = "N[,N...]")]
    resolution: Option<Vec<usize>>,
    /// Harmonic confinement strength.
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "R")]
    beta: Option<f64>,
    #[arg(long, global = true, value_name = "R")]
    target_variance: Option<f64>,
    /// Eigensolver residual tolerance.
    #[arg(long, global = true, value_name = "R")]
    tol: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Also write sampled or computed fields as CSV.
    #[arg(long, global = true)]
    dump_fields: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fisher information, variance and product of a density CSV.
    Functionals {
        /// `x1,…,xD,u` CSV on a complete tensor grid.
        input: Option<PathBuf>,
    },
    /// Closed-form values for a box or half-plane oscillator state.
    Oracle {
        /// Quantum numbers, comma separated.
        #[arg(long, value_delimiter = ',')]
        quantum: Option<Vec<u32>>,
    },
    /// Lowest eigenpairs of −½∇² + (β/8)|x|² with Dirichlet walls.
    Eigen {
        #[arg(long)]
        states: Option<usize>,
    },
    /// Minimum Fisher information, optionally at fixed variance.
    Minimize {
        #[arg(long, value_enum)]
        algorithm: Option<Algorithm>,
    },
    /// Ground-state variance and Fisher information along a β list.
    Curve {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        betas: Option<Vec<f64>>,
    },
    /// Recompute the closed-form reference values and their grid reproductions.
    Verify,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Functionals { .. } => "functionals",
            Command::Oracle { .. } => "oracle",
            Command::Eigen { .. } => "eigen",
            Command::Minimize { .. } => "minimize",
            Command::Curve { .. } => "curve",
            Command::Verify => "verify",
        }
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        c.output.dir = dir.clone();
    }
    if let Some(r) = &cli.resolution {
        c.grid.resolution = r.clone();
    }
    if cli.beta.is_some() {
        c.params.beta = cli.beta;
    }
    if cli.target_variance.is_some() {
        c.params.target_variance = cli.target_variance;
    }
    if let Some(t) = cli.tol {
        c.params.tol = t;
    }
    if let Some(s) = cli.seed {
        c.params.seed = s;
    }
    c.output.dump_fields |= cli.dump_fields;
    match &cli.command {
        Command::Functionals { input: Some(p) } => c.params.input = Some(p.clone()),
        Command::Oracle { quantum: Some(q) } => c.params.quantum = q.clone(),
        Command::Eigen { states: Some(k) } => c.params.states = *k,
        Command::Minimize { algorithm: Some(a) } => c.params.algorithm = *a,
        Command::Curve { betas: Some(b) } => c.params.betas = b.clone(),
        _ => {}
    }
    c.validate()?;
    Ok(c)
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("CRLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("CRLAB_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn run(cli: &Cli, config: &RunConfig, out: &Output) -> anyhow::Result<()> {
    out.write_str("config.toml", &config.to_toml()?)?;
    match cli.command {
        Command::Functionals { .. } => commands::functionals(config, out),
        Command::Oracle { .. } => commands::oracle(config, out),
        Command::Eigen { .. } => commands::eigen(config, out),
        Command::Minimize { .. } => commands::minimize(config, out),
        Command::Curve { .. } => commands::curve(config, out),
        Command::Verify => commands::verify(
            config,
            out,
            cli.resolution.is_some() || config_sets_resolution(cli)?,
        ),
    }
}

fn config_sets_resolution(cli: &Cli) -> anyhow::Result<bool> {
    let Some(path) = &cli.config else {
        return Ok(false);
    };
    let text = std::fs::read_to_string(path)?;
    let value: toml::Table = toml::from_str(&text)?;
    Ok(value
        .get("grid")
        .and_then(|g| g.get("resolution"))
        .is_some())
}

fn is_numerical(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<crlab_core::Error>()
            .is_some_and(crlab_core::Error::is_numerical)
            || e.downcast_ref::<VerifyFailures>().is_some()
    })
}

fn write_diagnostics(out: &Output, command: &str, err: &anyhow::Error) -> anyhow::Result<PathBuf> {
    let line = format!(
        "{{\"command\": {}, \"error\": {}}}\n",
        json_string(command),
        json_string(&format!("{err:#}"))
    );
    out.write_str("diagnostics.jsonl", &line)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own usage code is 2, which is reserved for numerical failures here
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let setup = || -> anyhow::Result<(RunConfig, Output)> {
        configure_threads()?;
        let config = effective_config(&cli)?;
        let out = Output::create(&config.output.dir, config.output.dump_fields)?;
        Ok((config, out))
    };
    let (config, out) = match setup() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(&cli, &config, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_numerical(&e) => {
            eprintln!("numerical failure: {e:#}");
            match write_diagnostics(&out, cli.command.name(), &e) {
                Ok(path) => eprintln!("diagnostics: {}", path.display()),
                Err(w) => eprintln!("could not write diagnostics: {w:#}"),
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
