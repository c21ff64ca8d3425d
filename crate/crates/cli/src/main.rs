//! `loclab`: bounds, optimal inputs, code simulations and validation suites
//! for linear operator channels.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use loclab_core::Suite;

use output::Format;

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or arguments: exit code 2.
    Config(String),
    /// Any other error while computing or writing: exit code 1.
    Runtime(String),
}

impl From<loclab_core::Error> for Failure {
    fn from(e: loclab_core::Error) -> Self {
        match e {
            loclab_core::Error::Config { .. } | loclab_core::Error::Usage(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "loclab", version, about = "Linear operator channel toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for Monte Carlo runs (overrides the config's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sweeps and simulations.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Counting functions against brute-force enumeration.
    Counting {
        #[command(subcommand)]
        action: CountingAction,
    },
    /// Capacity bounds over a range of T.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// Integer range `a:b` or `a:b:step`.
        #[arg(long)]
        t_range: Option<String>,
    },
    /// ρ_min(c, N*) over a range of c.
    RhoMin {
        #[arg(long)]
        nstar: usize,
        /// `c` value or range `a:b[:step]`.
        #[arg(long)]
        c: String,
        /// One row of values rounded to three decimals.
        #[arg(long)]
        table: bool,
    },
    /// ρ_min(c, N*) over a range of N*.
    RhoCurve {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        nstar: String,
    },
    /// Optimal input rank, T0/T1 and the symmetric subspace-coding optimum.
    OptimalRank {
        #[arg(long)]
        config: PathBuf,
        /// Monte Carlo samples per kernel row when no exact kernel exists.
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Blahut–Arimoto tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Capacity of the full matrix channel by enumeration.
    CapacityExact {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    Simulate {
        #[command(subcommand)]
        code: SimulateCode,
    },
    /// Run a validation suite; exits 3 on any failed check.
    Validate {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: loclab_core::Error| e.to_string())
}

#[derive(Subcommand, Debug)]
enum CountingAction {
    Verify {
        /// Prime field size.
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value_t = 4)]
        max_dim: usize,
    },
}

#[derive(Subcommand, Debug)]
enum SimulateCode {
    /// Lifted Gabidulin codes.
    Rm {
        #[arg(long)]
        channel: PathBuf,
        /// Code file; may be omitted when the channel file is an experiment
        /// with a `code` entry.
        #[arg(long)]
        code: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Lifted linear matrix codes.
    Lmc {
        #[arg(long)]
        channel: PathBuf,
        /// One or more block counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        generator_seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Rateless lifted linear matrix codes with one-bit feedback.
    Rateless {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long = "R")]
        r: Option<usize>,
        #[arg(long)]
        max_blocks: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        sessions: usize,
        #[arg(long)]
        series_seed: Option<u64>,
        /// Also compare incremental rank with a batch rank at every step.
        #[arg(long)]
        check_batch: bool,
    },
}

fn run(cli: Cli) -> Result<bool, Failure> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let g = &cli.global;
    let out = match cli.command {
        Command::Counting {
            action: CountingAction::Verify { q, max_dim },
        } => commands::counting_verify(q, max_dim)?,
        Command::Bounds { config, t_range } => commands::bounds(&config, t_range.as_deref())?,
        Command::RhoMin { nstar, c, table } => commands::rho_min(nstar, &c, table)?,
        Command::RhoCurve { c, nstar } => commands::rho_curve(c, &nstar)?,
        Command::OptimalRank { config, samples, tol } => commands::optimal_rank(&config, samples, tol, g.seed)?,
        Command::CapacityExact { config, tol } => commands::capacity_exact(&config, tol)?,
        Command::Simulate { code } => match code {
            SimulateCode::Rm { channel, code, trials } => commands::simulate_rm(&channel, code.as_deref(), trials, g.seed)?,
            SimulateCode::Lmc {
                channel,
                n,
                s,
                epsilon,
                generator_seed,
                trials,
            } => commands::simulate_lmc(
                &channel,
                commands::LmcArgs {
                    n,
                    s,
                    epsilon,
                    generator_seed,
                    trials,
                },
                g.seed,
            )?,
            SimulateCode::Rateless {
                channel,
                r,
                max_blocks,
                sessions,
                series_seed,
                check_batch,
            } => commands::simulate_rateless(
                &channel,
                commands::RatelessArgs {
                    r,
                    max_blocks,
                    sessions,
                    series_seed,
                    check_batch,
                },
                g.seed,
            )?,
        },
        Command::Validate { suite } => commands::validate(suite, g.seed)?,
    };
    let format = g.format.or(out.config_format).unwrap_or(out.default_format);
    let path = g.out.clone().or(out.config_path);
    output::emit(&out.report.render(format)?, path.as_deref())?;
    Ok(out.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(cli);
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(3)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
