//! Command line driver: builds maps, runs the verification suites and Monte Carlo
//! estimators, and writes CSV files that start with a JSON header line.

mod commands;
mod config;
mod error;
mod output;

use clap::{Arg, ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use config::{ExperimentConfig, KEYS};
use error::CliError;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "viana-lab", version, about = "Skew products with degenerate critical points: construction, checks and exponent estimates")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; falls back to VIANA_LAB_WORKERS, then 1.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample h, h', h'' and write the derived constants.
    BuildMap,
    /// Shape checks of the map on a 2^16 grid.
    CheckMap,
    /// Run one verification suite.
    LemmaCheck {
        /// 2.1, 2.2, 2.4, 2.5, 2.6, 2.7 or osc.
        #[arg(long)]
        lemma: String,
    },
    /// Exceptional-set estimates over `n_values`.
    Situations,
    /// Finite-time exponents at `count` random points.
    Exponents,
    /// One exponent census per grid point, plus an index file.
    Sweep,
}

/// Keys already covered by named flags.
const NAMED: &[&str] = &["seed", "workers", "out"];

fn command() -> clap::Command {
    let mut cmd = Cli::command();
    for &k in KEYS.iter().filter(|k| !NAMED.contains(k)) {
        let mut a = Arg::new(k).long(k).global(true).value_name("VALUE").help(format!("Override `{k}`"));
        if k.contains('_') {
            a = a.alias(k.replace('_', "-"));
        }
        cmd = cmd.arg(a);
    }
    cmd
}

fn overrides(m: &ArgMatches) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let mut cur = Some(m);
    while let Some(mm) = cur {
        for &k in KEYS.iter().filter(|k| !NAMED.contains(k)) {
            if let Ok(Some(v)) = mm.try_get_one::<String>(k) {
                if !out.iter().any(|(key, _)| *key == k) {
                    out.push((k, v.clone()));
                }
            }
        }
        cur = mm.subcommand().map(|(_, s)| s);
    }
    out
}

fn load(cli: &Cli, m: &ArgMatches) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("reading {}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    for (k, v) in overrides(m) {
        cfg.set(k, &v)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> Result<(), CliError> {
    let matches = command().get_matches();
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::config(e.to_string()))?;
    let cfg = load(&cli, &matches)?;
    let workers = cfg.resolved_workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(format!("worker pool: {e}")))?;
    let outcome = pool.install(|| match &cli.command {
        Command::BuildMap => commands::build_map_cmd(&cfg),
        Command::CheckMap => commands::check_map_cmd(&cfg),
        Command::LemmaCheck { lemma } => commands::lemma_check_cmd(&cfg, lemma),
        Command::Situations => commands::situations_cmd(&cfg),
        Command::Exponents => commands::exponents_cmd(&cfg),
        Command::Sweep => commands::sweep_cmd(&cfg),
    })?;
    outcome.finish(&cfg)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
