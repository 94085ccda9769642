mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use branchstable::Error;
use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use commands::{Failure, Status};
use config::{parse_assignment, read_file, resolve, ConfigError, RunConfig};
use report::Report;

const EXIT_ACCEPTANCE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

/// Simulation and verification driver for (d, alpha, beta)-branching
/// particle systems and their occupation-time fluctuation limit.
#[derive(Parser)]
#[command(name = "branchstable", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Particle Monte Carlo: ensembles of rescaled occupation-time fluctuations.
    Simulate,
    /// Limit process: constants, sampled paths, characteristic-function tables.
    Limit,
    /// Codifference sweep over T with the decay-exponent fit.
    Codiff,
    /// Monte Carlo Laplace functional against the integral-equation value (d = 1).
    Bridge,
    /// Run the acceptance criteria.
    Verify,
    /// Dependence exponent and regime tables, including the (gamma, beta)-plane.
    Regime,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Limit => "limit",
            Command::Codiff => "codiff",
            Command::Bridge => "bridge",
            Command::Verify => "verify",
            Command::Regime => "regime",
        }
    }
}

#[derive(Args)]
struct Common {
    /// TOML file with flat `key = value` settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report path; stdout if omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Branching rate.
    #[arg(long, global = true)]
    v: Option<f64>,
    /// Accept parameters outside the intermediate-dimension range.
    #[arg(long, global = true)]
    allow_boundary: bool,
    /// Add the elapsed wall-clock time to the report footer (breaks
    /// byte-for-byte reproducibility of reports).
    #[arg(long, global = true)]
    timings: bool,
}

impl Common {
    fn layers(&self) -> Result<Vec<(String, Value)>, ConfigError> {
        let mut out = self.set.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>, _>>()?;
        let mut push = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("seed", self.seed.map(|s| Value::Integer(s as i64)));
        push("threads", self.threads.map(|s| Value::Integer(s as i64)));
        push("d", self.d.map(|s| Value::Integer(s as i64)));
        push("alpha", self.alpha.map(Value::Float));
        push("beta", self.beta.map(Value::Float));
        push("v", self.v.map(Value::Float));
        push("allow_boundary", self.allow_boundary.then_some(Value::Boolean(true)));
        Ok(out)
    }
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let base = match &cli.common.config {
        Some(p) => match read_file(p) {
            Ok(t) => t,
            Err(e) => return config_error(e),
        },
        None => Table::new(),
    };
    let cfg: RunConfig = match cli.common.layers().and_then(|l| resolve(l, base)) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            return config_error(e);
        }
    }
    let (out, echo): (Box<dyn Write>, bool) = match &cli.common.output {
        Some(p) => match File::create(p) {
            Ok(f) => (Box::new(BufWriter::new(f)), true),
            Err(e) => return config_error(format!("{}: {e}", p.display())),
        },
        None => (Box::new(BufWriter::new(io::stdout())), false),
    };
    let start = Instant::now();
    let mut rep = Report::new(out, echo);
    if let Err(e) = rep.header(cli.command.name(), &cfg) {
        eprintln!("error writing report: {e}");
        return ExitCode::FAILURE;
    }
    let res = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &mut rep),
        Command::Limit => commands::limit(&cfg, &mut rep),
        Command::Codiff => commands::codiff(&cfg, &mut rep),
        Command::Bridge => commands::bridge(&cfg, &mut rep),
        Command::Verify => commands::verify(&cfg, &mut rep),
        Command::Regime => commands::regime(&cfg, &mut rep),
    };
    let elapsed = cli.common.timings.then(|| start.elapsed().as_secs_f64());
    let (status, code) = match res {
        Ok(s) => (
            s.label().to_string(),
            match s {
                Status::Ok => 0,
                Status::Failed => EXIT_ACCEPTANCE,
                Status::NonConvergence => EXIT_NONCONVERGENCE,
            },
        ),
        Err(Failure::Io(e)) => {
            eprintln!("error writing report: {e}");
            return ExitCode::FAILURE;
        }
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
                _ => EXIT_CONFIG,
            };
            rep.say(format!("error: {e}"));
            (if code == EXIT_CONFIG { "config_error" } else { "non_convergence" }.to_string(), code)
        }
    };
    if let Err(e) = rep.finish(&status, elapsed) {
        eprintln!("error writing report: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::from(code)
}
