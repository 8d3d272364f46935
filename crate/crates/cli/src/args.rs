//! Command-line surface: the clap types every subcommand parses into.
//!
//! Flags always override values read from a configuration file, and all
//! validation happens before any computation starts.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ruinlab",
    version,
    about = "Finite-horizon ruin probabilities under bonus-malus premiums",
    long_about = "Exact and simulated finite-horizon ruin probabilities for a \
discrete-time surplus process with delayed by-claims and an experience-rated \
premium scale.  Identical invocations produce byte-identical output."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Cap on worker threads (default: the RUINLAB_WORKERS environment
    /// variable, else one thread per core).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Print numbers with 17 significant digits instead of 6.
    #[arg(long, global = true)]
    pub full_precision: bool,

    /// Write output here instead of standard output (for `reproduce`:
    /// a directory tree).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Report progress on the error stream; repeat for more detail.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact ruin probability for a query described in a JSON file.
    Ruin(RuinArgs),
    /// Seeded Monte Carlo estimate of the same probability.
    Simulate(SimulateArgs),
    /// Premium-level transition matrix, stationary law, and long-run
    /// expected premium.
    Markov(MarkovArgs),
    /// Recompute the bundled reference tables, chains, and figures and
    /// diff them against the stored values.
    Reproduce(ReproduceArgs),
    /// Ruin-probability grid over surplus, delay probability, and
    /// premium principle.
    Sweep(SweepArgs),
}

/// Query fields that may be overridden from the command line.
#[derive(Debug, Args)]
pub struct QueryOverrides {
    /// Override the file's by-claim delay probability.
    #[arg(long)]
    pub q: Option<f64>,

    /// Override the file's initial surplus.
    #[arg(long)]
    pub u0: Option<i64>,

    /// Override the file's horizon (number of periods).
    #[arg(long)]
    pub horizon: Option<u32>,

    /// Override the file's one-based initial premium level.
    #[arg(long, value_name = "LEVEL")]
    pub initial_level: Option<usize>,

    /// Override the claim distribution's truncation epsilon.
    #[arg(long, value_name = "EPS")]
    pub truncation_epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RuinArgs {
    /// Query description (JSON).
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,

    /// What to print: the probability alone, the ruin profile over
    /// surplus, or a JSON document with both.
    #[arg(long, value_enum, default_value_t = RuinEmit::Value)]
    pub emit: RuinEmit,

    #[command(flatten)]
    pub overrides: QueryOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuinEmit {
    Value,
    Profile,
    Json,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Query description (JSON), same schema as `ruin --config`.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,

    /// Number of simulated paths.
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: u64,

    /// RNG seed; equal seeds give equal estimates regardless of
    /// `--workers`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// What to print: a one-line summary with the standard error, the
    /// estimate alone, or a JSON document.
    #[arg(long, value_enum, default_value_t = SimulateEmit::Summary)]
    pub emit: SimulateEmit,

    #[command(flatten)]
    pub overrides: QueryOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimulateEmit {
    Summary,
    Value,
    Json,
}

#[derive(Debug, Args)]
pub struct MarkovArgs {
    /// Benchmark table whose principle to analyse (1 or 3; tables 2 and
    /// 4 rate on settled experience and have no constant matrix).
    #[arg(long, default_value_t = 1)]
    pub table: u8,

    /// Correlation case: H, M, L, or all.
    #[arg(long, default_value = "all")]
    pub case: String,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Table to recompute (repeatable); all four by default.
    #[arg(long = "table", value_name = "N")]
    pub tables: Vec<u8>,

    /// Fast subset: scenarios H1 and L2 at u in {0, 50, 100} only.
    #[arg(long)]
    pub smoke: bool,

    /// Exit with code 2 if any recomputed cell strays from the bundled
    /// reference beyond tolerance (pinned known deviations excepted).
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep description (JSON): correlation case, surplus values, delay
    /// probabilities, principles, and an optional row budget.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
}
