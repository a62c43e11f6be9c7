use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use modelsplit_core::engine::{Branching, Budget, SearchMode};

#[derive(Debug, Parser)]
#[command(
    name = "modelsplit",
    version,
    about = "Budgeted constraint solving with model splitting"
)]
pub struct Cli {
    /// More diagnostics on stderr (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one model, optionally writing split models when the budget trips.
    Solve(SolveArgs),
    /// Run to a node count, then print and write the resumed and split models.
    Split(SplitArgs),
    /// Solve by recursive splitting over a pool of worker processes.
    DistSolve(DistArgs),
    /// Enumerate every solution by brute force.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    First,
    All,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::First => SearchMode::First,
            ModeArg::All => SearchMode::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchingArg {
    #[value(name = "2way")]
    TwoWay,
    #[value(name = "nway")]
    NWay,
}

impl From<BranchingArg> for Branching {
    fn from(b: BranchingArg) -> Self {
        match b {
            BranchingArg::TwoWay => Branching::TwoWay,
            BranchingArg::NWay => Branching::NWay,
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value = "first")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "nway")]
    pub branching: BranchingArg,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub model: PathBuf,
    /// Stop after this many branching decisions.
    #[arg(long)]
    pub budget_nodes: Option<u64>,
    /// Stop after this many milliseconds.
    #[arg(long)]
    pub budget_millis: Option<u64>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Directory for the resumed base and split models if the budget trips.
    #[arg(long)]
    pub emit_splits: Option<PathBuf>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub split_factor: u64,
    /// File stem of split models (defaults to the model's file stem).
    #[arg(long, hide = true)]
    pub split_prefix: Option<String>,
    /// Write a JSON worker report here.
    #[arg(long, hide = true)]
    pub report: Option<PathBuf>,
    /// Print nothing on stdout.
    #[arg(long, hide = true)]
    pub quiet: bool,
}

impl SolveArgs {
    pub fn budget(&self) -> Budget {
        Budget {
            max_nodes: self.budget_nodes,
            max_millis: self.budget_millis,
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub model: PathBuf,
    /// Branching decisions to take before stopping.
    #[arg(long)]
    pub at_nodes: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub split_factor: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Model to solve; omit with --resume.
    #[arg(required_unless_present = "resume")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    #[arg(long, default_value_t = 2)]
    pub split_factor: usize,
    /// Node budget of the root item.
    #[arg(long)]
    pub initial_budget_nodes: Option<u64>,
    /// Time budget of the root item, in milliseconds.
    #[arg(long)]
    pub initial_budget_millis: Option<u64>,
    /// Budget multiplier per split depth.
    #[arg(long, default_value_t = 2.0)]
    pub budget_growth: f64,
    /// Upper bound on any scheduled budget.
    #[arg(long, default_value_t = 1 << 40)]
    pub max_budget: u64,
    #[arg(long)]
    pub spool: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Continue the run recorded in --spool.
    #[arg(long)]
    pub resume: bool,
    /// Run workers as threads of this process instead of child processes.
    #[arg(long, hide = true)]
    pub in_process: bool,
    /// Kill all workers and exit with status 4 after this many claims.
    #[arg(long, hide = true)]
    pub halt_after_claims: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub model: PathBuf,
    /// Refuse search spaces larger than this.
    #[arg(long, default_value_t = modelsplit_core::oracle::DEFAULT_CAP)]
    pub cap: u64,
}
