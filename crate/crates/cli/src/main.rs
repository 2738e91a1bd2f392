//! `gsub`: configure and run the moment-bound, CLT, Berry–Esseen and
//! application experiments from JSON configs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Command, RunConfig, OUTPUT_DIR_ENV};

/// Version of the JSON report layout.
const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] gauss_subord::Error),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

#[derive(Parser, Debug)]
#[command(name = "gsub", version, about = "Gaussian subordination experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Off-diagonal moment sums against their scaling bound
    Bound(Common),
    /// Monte Carlo CLT check of a subordinated sum
    Clt(Common),
    /// Berry-Esseen bounds, optionally against empirical distances
    Be(Common),
    /// Increment-ratio statistic on exact fBm paths
    Ir(Common),
    /// Locally stationary moving-average pipeline
    Locstat(Common),
    /// Finite-n summability diagnostics of a covariance model
    Conditions(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run config
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated list of array lengths
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    /// Slot count when `bound` gets a single function
    #[arg(long)]
    p: Option<usize>,
    /// Output directory (default from the environment, then `gsub-out`)
    #[arg(short, long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    /// Worker threads for replicate loops
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Print the resolved config and exit
    #[arg(long)]
    describe: bool,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Bound(c) => (Command::Bound, c),
            Sub::Clt(c) => (Command::Clt, c),
            Sub::Be(c) => (Command::Be, c),
            Sub::Ir(c) => (Command::Ir, c),
            Sub::Locstat(c) => (Command::Locstat, c),
            Sub::Conditions(c) => (Command::Conditions, c),
        }
    }
}

fn resolve(cmd: Command, args: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    macro_rules! over {
        ($($f:ident),*) => {$(if let Some(v) = args.$f.clone() { cfg.$f = Some(v); })*};
    }
    over!(seed, n, n_list, reps, m, alpha, p, output_dir);
    cfg.resolve(cmd)
}

fn execute(cmd: Command, cfg: &RunConfig) -> Result<bool, CliError> {
    let hash = cfg.hash()?;
    let out = commands::run(cmd, cfg)?;
    let passed = out.checks.iter().all(|c| c.passed);
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cmd.name(),
        "config_hash": hash,
        "seed": cfg.seed,
        "verdict": if passed { "pass" } else { "flagged" },
        "checks": out.checks,
        "config": cfg,
        "result": out.result,
    });
    let dir = cfg.output_dir.as_ref().unwrap();
    let io = |e: std::io::Error| CliError::Run(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    std::fs::write(dir.join(format!("{}.json", cmd.name())), text).map_err(io)?;
    for (name, body) in &out.files {
        std::fs::write(dir.join(name), body).map_err(io)?;
    }
    for c in &out.checks {
        println!("{:<16} {:<4} {}", c.name, if c.passed { "ok" } else { "FAIL" }, c.detail);
    }
    println!("{} report written to {}", cmd.name(), dir.display());
    Ok(passed)
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
    let (cmd, args) = cli.command.split();
    let cfg = match resolve(cmd, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gsub {}: {e}", cmd.name());
            return ExitCode::from(1);
        }
    };
    if args.describe {
        let mut v = serde_json::to_value(&cfg).expect("config serializes");
        v["output_dir"] = json!(cfg.output_dir);
        println!("{}", serde_json::to_string_pretty(&v).expect("config serializes"));
        return ExitCode::SUCCESS;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads.max(1)).build_global() {
        eprintln!("gsub: thread pool: {e}");
        return ExitCode::from(1);
    }
    match execute(cmd, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("gsub {}: {e}", cmd.name());
            ExitCode::from(1)
        }
    }
}
