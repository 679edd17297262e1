//! `epimm`: batch computations for epidemic metapopulation minimax analysis.
//!
//! Subcommands: `strategy` (closed-form optima), `evaluate` (growth rate,
//! reproduction number, extinction, total size), `minimax` (nested games),
//! `grid` (parameter sweeps to CSV), `simulate` (Monte Carlo).

mod commands;
mod model_file;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "epimm", version, about = "Epidemic metapopulation minimax toolkit")]
struct Cli {
    /// Worker threads (default: available parallelism). The EPIMM_THREADS
    /// environment variable overrides this flag.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form optimal strategies: chi, omega, pi*, pi~, Q*, and border
    /// controls when a susceptible migration matrix is given.
    Strategy(StrategyArgs),
    /// Growth rate, reproduction number, extinction probabilities, and
    /// expected total size for the model's (pi, Q) pair.
    Evaluate(EvaluateArgs),
    /// Nested minimax games over susceptible distributions and infective
    /// migration matrices.
    Minimax(MinimaxArgs),
    /// Parameter sweep over recovery-rate pairs, written as CSV.
    Grid(GridArgs),
    /// Stochastic simulation with Monte Carlo summaries.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct StrategyArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: String,
    /// Expected growth rate tau(pi, Q).
    #[arg(long)]
    tau: bool,
    /// Basic reproduction number R0(pi, Q).
    #[arg(long)]
    r0: bool,
    /// Extinction probabilities by starting group.
    #[arg(long)]
    extinction: bool,
    /// Expected total epidemic size by starting group.
    #[arg(long = "total-size")]
    total_size: bool,
}

#[derive(Args, Clone, Copy)]
struct BoxArgs {
    /// Lower bound on each off-diagonal migration rate.
    #[arg(long = "q-lo", default_value_t = 1e-6)]
    q_lo: f64,
    /// Upper bound on each off-diagonal migration rate.
    #[arg(long = "q-hi", default_value_t = 1e3)]
    q_hi: f64,
    /// Interior floor on susceptible distributions.
    #[arg(long = "pi-floor", default_value_t = 1e-9)]
    pi_floor: f64,
    /// Direct-search restarts per game.
    #[arg(long, default_value_t = 8)]
    multistarts: usize,
    /// Outer value tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct MinimaxArgs {
    #[arg(long)]
    model: String,
    #[arg(long, value_enum, default_value_t = MinimaxObjective::Tau)]
    objective: MinimaxObjective,
    #[command(flatten)]
    search: BoxArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum MinimaxObjective {
    Tau,
    R0,
}

#[derive(Args)]
struct GridArgs {
    /// Output CSV path.
    #[arg(long)]
    out: String,
    #[arg(long, value_enum)]
    objective: GridObjective,
    #[arg(long, default_value_t = 1.0)]
    beta1: f64,
    #[arg(long, default_value_t = 2.0)]
    beta2: f64,
    #[arg(long = "gamma1-lo", default_value_t = 0.01)]
    gamma1_lo: f64,
    #[arg(long = "gamma1-hi", default_value_t = 3.99)]
    gamma1_hi: f64,
    #[arg(long = "gamma1-steps", default_value_t = 64)]
    gamma1_steps: usize,
    #[arg(long = "gamma2-lo", default_value_t = 0.01)]
    gamma2_lo: f64,
    #[arg(long = "gamma2-hi", default_value_t = 3.99)]
    gamma2_hi: f64,
    #[arg(long = "gamma2-steps", default_value_t = 64)]
    gamma2_steps: usize,
    #[command(flatten)]
    search: BoxArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridObjective {
    /// Optimal growth rate inf_pi sup_Q tau.
    Tau,
    /// log(sup_Q R0(pi*, Q) / omega).
    R0Ratio,
    /// sup_Q tau(pi~, Q) - sup_Q tau(pi*, Q).
    TauDiff,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 10_000)]
    replicates: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Initial infectives per group, comma separated (default: one
    /// infective in group 1).
    #[arg(long)]
    y0: Option<String>,
    /// Total-infection cap classifying a major outbreak.
    #[arg(long, default_value_t = 10_000)]
    cap: u64,
    /// Model-time cap (default: none).
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Simulate the closed finite population of this size instead of the
    /// branching approximation (requires R in the model file).
    #[arg(long = "finite-n")]
    finite_n: Option<u64>,
}

/// Failure categories mapped to documented exit codes.
pub enum CliError {
    /// Exit 2: invalid arguments or model contents.
    Validation(String),
    /// Exit 3: the request needs an input the model file does not provide,
    /// or asks for an undefined quantity.
    MissingInput(String),
    /// Exit 4: filesystem failure.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::MissingInput(m) | CliError::Io(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = std::env::var("EPIMM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli.threads);
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(2);
        }
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }

    let result = match cli.command {
        Command::Strategy(args) => commands::strategy(&args.model),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Minimax(args) => commands::minimax(&args),
        Command::Grid(args) => commands::grid(&args),
        Command::Simulate(args) => commands::simulate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
