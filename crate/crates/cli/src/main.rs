//! `zonodpp`: run, validate and inspect projection DPP sampling experiments.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

mod config;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use zonodpp::diagnostics::ENUMERATION_GUARD;
use zonodpp::numerics::binomial;
use zonodpp::Basis;

use config::{ConfigError, FileConfig, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "zonodpp",
    version,
    about = "Projection DPP sampling over zonotopes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sampler(s) and write traces, metrics and a manifest.
    Run(RunArgs),
    /// Parse and validate a config without running; print resolved values.
    Validate(RunArgs),
    /// Dump the exact basis law of the configured model as JSON.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the PSRF of subset inclusion from a directory of trace CSVs.
    Psrf {
        /// Directory holding `chain-*.csv` files of one sampler.
        #[arg(long)]
        traces: PathBuf,
        /// Space- or comma-separated item indices; repeatable.
        #[arg(long, required = true)]
        subset: Vec<String>,
        /// Fraction of each chain discarded first.
        #[arg(long, default_value_t = 0.0)]
        burn_in: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    steps: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    seconds: Option<f64>,
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut f = FileConfig::load(&self.config)?;
        f.apply(&Overrides {
            seed: self.seed,
            chains: self.chains,
            steps: self.steps,
            seconds: self.seconds,
            sampler: self.sampler.clone(),
            out: self.out.clone(),
            parallelism: self.parallelism,
        });
        RunConfig::resolve(&f)
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let model = cfg.build_model()?;
    let manifest = runner::run(&cfg, &model, Some(&args.config))?;
    println!(
        "wrote {} traces to {}",
        manifest.traces.len(),
        cfg.out.display()
    );
    Ok(())
}

fn validate(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let model = cfg.build_model()?;
    let a = &model.weighted().target;
    let (r, n) = (a.rank(), a.len());
    let bases = binomial(n as u64, r as u64);
    println!("ok");
    println!("r = {r}, n = {n}, C(n, r) = {bases}");
    let samplers: Vec<&str> = cfg.samplers.iter().map(|k| k.name()).collect();
    println!("samplers = {}", samplers.join(", "));
    println!(
        "seed = {}, tiling_seed = {}, weight_seed = {}, model_seed = {}",
        cfg.seed, cfg.tiling_seed, cfg.weight_seed, cfg.model_seed
    );
    if cfg.enumerate && bases > ENUMERATION_GUARD {
        println!("warning: C(n, r) = {bases} exceeds the enumeration guard {ENUMERATION_GUARD}; exact-law metrics are disabled");
    }
    Ok(())
}

#[derive(Serialize)]
struct LawEntry<'a> {
    basis: &'a Basis,
    probability: f64,
}

fn enumerate(config: &Path, out: Option<&Path>) -> Result<()> {
    let f = FileConfig::load(config)?;
    let mut cfg = RunConfig::resolve(&FileConfig {
        steps: f.steps.or(Some(1)),
        ..f
    })?;
    cfg.enumerate = true;
    let model = cfg.build_model()?;
    let law = zonodpp::diagnostics::enumerate_law(&model.weighted().target, None)?;
    let entries: Vec<LawEntry> = law
        .entries()
        .iter()
        .map(|(basis, probability)| LawEntry {
            basis,
            probability: *probability,
        })
        .collect();
    let doc = serde_json::json!({ "normalizer": law.normalizer(), "entries": entries });
    let text = serde_json::to_string_pretty(&doc)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_subset(s: &str) -> Result<Vec<usize>, ConfigError> {
    let mut v: Vec<usize> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| ConfigError(format!("subset: bad index {t:?}")))
        })
        .collect::<Result<_, _>>()?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn psrf(traces: &Path, subsets: &[String], burn_in: f64) -> Result<()> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(ConfigError(format!("burn_in: {burn_in} not in [0, 1)")).into());
    }
    let mut out = serde_json::Map::new();
    for s in subsets {
        let idx = parse_subset(s)?;
        let tag = idx
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("-");
        let value = match runner::psrf_from_dir(traces, &idx, burn_in) {
            Ok(rep) => serde_json::to_value(rep)?,
            Err(e) => match e.downcast_ref::<zonodpp::Error>() {
                Some(err @ zonodpp::Error::Undefined(_)) => {
                    serde_json::json!({ "undefined": err.to_string() })
                }
                _ => return Err(e),
            },
        };
        out.insert(tag, value);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Validate(a) => validate(a),
        Command::Enumerate { config, out } => enumerate(config, out.as_deref()),
        Command::Psrf {
            traces,
            subset,
            burn_in,
        } => psrf(traces, subset, *burn_in),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
