//! `additive`: reproducible experiments on additive arithmetic functions.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on compute errors.
//! Errors are written to stderr as a single JSON object.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{read_config_file, Command, ConfigError, ExperimentConfig, RawConfig};

#[derive(Parser, Debug)]
#[command(
    name = "additive",
    version,
    about = "Moments and limit laws of additive functions on arithmetic progressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Empirical moments, predicted prime sums and their ratios
    Moments(MomentsArgs),
    /// Exact and Monte Carlo moments of the two-valued model
    Simulate(SimulateArgs),
    /// Condition profile and KS distances to the normal law and K(u)
    Limits(LimitsArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Flat key = value config file; flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in function or kolmogorov_example
    #[arg(long = "fn", value_name = "NAME")]
    fn_name: Option<String>,
    /// Prime-power rule over p and a, e.g. "ln(p)/p^a"
    #[arg(long, value_name = "EXPR")]
    rule: Option<String>,
    /// Kind of a rule function: additive | strongly_additive
    #[arg(long, value_name = "KIND")]
    kind: Option<String>,
    /// Name of a rule function
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
    /// Modulus of the progression [default: 1]
    #[arg(long, value_name = "K")]
    k: Option<String>,
    /// Residue of the progression (required when k > 1)
    #[arg(long, value_name = "L")]
    l: Option<String>,
    /// Upper end of the range
    #[arg(long, value_name = "N")]
    n: Option<String>,
    /// Prime selection: paper_progression | divisor_density | both
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Kolmogorov parameters, e.g. A=-1,C=1,mu=0.3,nu=0.3
    #[arg(long, value_name = "PARAMS")]
    params: Option<String>,
    /// Output directory [default: .]
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Worker threads [default: all cores]
    #[arg(long, value_name = "N")]
    threads: Option<String>,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Highest moment order [default: 4]
    #[arg(long, value_name = "U")]
    orders: Option<String>,
    /// Largest admissible sup |f(p)| for the boundedness verdict [default: 10]
    #[arg(long, value_name = "X")]
    sup_bound: Option<String>,
    /// Largest admissible tail of sum f(p)^2/p over (n/10, n] [default: 1e-4]
    #[arg(long, value_name = "X")]
    tail_tol: Option<String>,
    /// Exceedance threshold as a multiple of B(n) [default: 0.5]
    #[arg(long, value_name = "X")]
    eps: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Highest moment order, at most 8 [default: 4]
    #[arg(long, value_name = "U")]
    orders: Option<String>,
    /// Monte Carlo trials
    #[arg(long, value_name = "N")]
    trials: Option<String>,
    /// RNG seed
    #[arg(long, value_name = "SEED")]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Reference law: normal | kfun | both [default: normal]
    #[arg(long, value_name = "REF")]
    vs: Option<String>,
}

fn put(raw: &mut RawConfig, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        raw.insert(key.to_string(), v.clone());
    }
}

fn merge_common(c: &CommonArgs) -> Result<RawConfig, ConfigError> {
    let mut raw = match &c.config {
        Some(path) => read_config_file(path)?,
        None => RawConfig::new(),
    };
    put(&mut raw, "fn", &c.fn_name);
    put(&mut raw, "rule", &c.rule);
    put(&mut raw, "kind", &c.kind);
    put(&mut raw, "name", &c.name);
    put(&mut raw, "k", &c.k);
    put(&mut raw, "l", &c.l);
    put(&mut raw, "n", &c.n);
    put(&mut raw, "mode", &c.mode);
    put(&mut raw, "params", &c.params);
    put(&mut raw, "out", &c.out);
    put(&mut raw, "threads", &c.threads);
    Ok(raw)
}

fn resolve(cmd: &Cmd) -> Result<(Command, ExperimentConfig), ConfigError> {
    let (command, raw) = match cmd {
        Cmd::Moments(a) => {
            let mut raw = merge_common(&a.common)?;
            put(&mut raw, "orders", &a.orders);
            put(&mut raw, "sup_bound", &a.sup_bound);
            put(&mut raw, "tail_tol", &a.tail_tol);
            put(&mut raw, "eps", &a.eps);
            (Command::Moments, raw)
        }
        Cmd::Simulate(a) => {
            let mut raw = merge_common(&a.common)?;
            put(&mut raw, "orders", &a.orders);
            put(&mut raw, "trials", &a.trials);
            put(&mut raw, "seed", &a.seed);
            (Command::Simulate, raw)
        }
        Cmd::Limits(a) => {
            let mut raw = merge_common(&a.common)?;
            put(&mut raw, "vs", &a.vs);
            (Command::Limits, raw)
        }
    };
    Ok((command, ExperimentConfig::validate(&raw, command)?))
}

fn config_failure(err: &ConfigError) -> ExitCode {
    let body = json!({ "error": "config", "field": err.field, "message": err.message });
    eprintln!("{body}");
    ExitCode::from(2)
}

fn clap_failure(err: &clap::Error) -> ExitCode {
    let field = match err.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s
            .trim_start_matches('-')
            .split([' ', '='])
            .next()
            .unwrap_or("")
            .replace('-', "_"),
        _ => "command".to_string(),
    };
    let message = err.render().to_string();
    let message = message
        .lines()
        .next()
        .unwrap_or("")
        .trim_start_matches("error: ");
    config_failure(&ConfigError::new(&field, message))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return clap_failure(&e),
    };
    let (command, cfg) = match resolve(&cli.command) {
        Ok(v) => v,
        Err(e) => return config_failure(&e),
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            return config_failure(&ConfigError::new("threads", e.to_string()));
        }
    }
    let result = match command {
        Command::Moments => commands::cmd_moments(&cfg),
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Limits => commands::cmd_limits(&cfg),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", cfg.out.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": "compute", "message": e.to_string() })
            );
            ExitCode::from(3)
        }
    }
}
