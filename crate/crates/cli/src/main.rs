mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use cfrd_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cfrd", version, about = "CFR, CFR-D and safe subgame re-solving experiments")]
struct Cli {
    /// Worker threads for independent subgame solves.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed for randomized checks; every solve path is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a whole game with CFR or the sequence-form linear program.
    Solve(SolveArgs),
    /// Rebuild subgame strategies from a trunk strategy and root values,
    /// safely and with the unsafe fixed-trunk baseline.
    Recover(RecoverArgs),
    /// Solve with CFR-D, then recover the subgames.
    Cfrd(CfrdArgs),
    /// Re-solve the lifted equilibrium of the card-abstracted Leduc game.
    ResolveAbstract(ResolveAbstractArgs),
    /// Print the exploitability and values of a strategy file.
    Exploit(ExploitArgs),
    /// Check a game, and optionally a strategy file and a value file.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct GameArgs {
    /// rps, kuhn, leduc or leduc-abstract.
    #[arg(long)]
    game: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FrontierArg {
    /// The built-in split of each game.
    Natural,
    /// No subgames.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Cfr,
    Lp,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 10_000)]
    iters: u64,
    #[arg(long, value_enum, default_value_t = Method::Cfr)]
    method: Method,
    /// Evaluate every this many iterations instead of at powers of two.
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value_t = FrontierArg::Natural)]
    frontier: FrontierArg,
    /// Strategy whose trunk is kept; missing information sets play uniformly.
    #[arg(long)]
    strategy: PathBuf,
    /// Root values; by default, best-response values against the strategy.
    #[arg(long)]
    cfvs: Option<PathBuf>,
    #[arg(long, default_value_t = 200_000)]
    recovery_iters: u64,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CfrdArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value_t = FrontierArg::Natural)]
    frontier: FrontierArg,
    #[arg(long, default_value_t = 1000)]
    trunk_iters: u64,
    #[arg(long, default_value_t = 1000)]
    subgame_iters: u64,
    #[arg(long, default_value_t = 200_000)]
    recovery_iters: u64,
    /// Recover and evaluate every this many trunk iterations.
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ResolveAbstractArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value_t = FrontierArg::Natural)]
    frontier: FrontierArg,
    /// How the abstract game is solved.
    #[arg(long, value_enum, default_value_t = Method::Lp)]
    method: Method,
    /// CFR iterations on the abstract game.
    #[arg(long, default_value_t = 100_000)]
    iters: u64,
    #[arg(long, default_value_t = 3200)]
    recovery_iters: u64,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExploitArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long)]
    strategy: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value_t = FrontierArg::Natural)]
    frontier: FrontierArg,
    #[arg(long)]
    strategy: Option<PathBuf>,
    /// Value file that must cover every root information set.
    #[arg(long)]
    cfvs: Option<PathBuf>,
}

/// Failure of a command, with the exit status it maps to.
#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::UnknownGame(_) | Error::UnsupportedGame(_) | Error::ZeroIterations | Error::NoSuchSubgame(_) | Error::Io(_) => {
                Failure::Config(err.to_string())
            }
            _ => Failure::Numerical(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CFRD_LOG", "warn")).init();
    let cli = Cli::parse();
    log::debug!("seed {}", cli.seed);
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(&cli, a),
        Command::Recover(a) => commands::recover(&cli, a),
        Command::Cfrd(a) => commands::cfrd(&cli, a),
        Command::ResolveAbstract(a) => commands::resolve_abstract(&cli, a),
        Command::Exploit(a) => commands::exploit(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
