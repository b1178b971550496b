use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "daisy", version, about = "Combs, stepping-up colorings and monochromatic daisies")]
pub struct Cli {
    /// Worker threads; defaults to available parallelism. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Auxiliary-tree inspection
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Closed intervals and comb decomposition of a leaf set
    #[command(subcommand)]
    Combs(CombsCmd),
    /// Base colorings (PHIF files)
    #[command(subcommand)]
    Phi(PhiCmd),
    /// The lifted coloring χ
    #[command(subcommand)]
    Chi(ChiCmd),
    /// Monochromatic daisy searches
    #[command(subcommand)]
    Daisy(DaisyCmd),
    /// The extraction pipeline
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Lower and upper bound evaluation
    #[command(subcommand)]
    Bounds(BoundsCmd),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LeafArgs {
    /// Tree height N; leaves are 1..=2^N
    #[arg(long)]
    pub n: u32,
    /// Leaves, comma or space separated
    #[arg(long, conflicts_with = "set_file", required_unless_present = "set_file")]
    pub set: Option<String>,
    /// File holding the leaves
    #[arg(long)]
    pub set_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum TreeCmd {
    /// Graphviz rendering of the auxiliary tree
    Dot(LeafArgs),
    /// Ancestor levels of consecutive leaves
    Delta(LeafArgs),
}

#[derive(Subcommand, Debug)]
pub enum CombsCmd {
    /// One line per closed interval, with its comb reading
    Analyze {
        #[command(flatten)]
        leaves: LeafArgs,
        /// Emit the auxiliary tree with maximal combs highlighted instead
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BudgetArgs {
    /// Search-node budget (deterministic)
    #[arg(long)]
    pub node_budget: Option<u64>,
    /// Wall-clock budget in milliseconds
    #[arg(long)]
    pub time_budget_ms: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    Seeded,
    Greedy,
    Exhaustive,
}

#[derive(Subcommand, Debug)]
pub enum PhiCmd {
    /// Uniformly random family from a seed
    Gen {
        #[command(flatten)]
        shape: PhiShape,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Family certified free of monochromatic simple daisies of the given size
    Make {
        #[command(flatten)]
        shape: PhiShape,
        /// Daisy size m the base colorings must avoid
        #[arg(long)]
        m_target: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Seeded)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Retries for seeded, flips for greedy, edge cap for exhaustive
        #[arg(long, default_value_t = 200)]
        tries: u32,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the daisy search on every table of a family
    Verify {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        m_target: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Header and table contents
    Show {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PhiShape {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub r: u32,
    #[arg(long)]
    pub k: u32,
}

#[derive(Subcommand, Debug)]
pub enum ChiCmd {
    /// χ of one edge with the per-comb breakdown
    Eval {
        #[arg(long)]
        phi: PathBuf,
        /// The k + r leaves of the edge
        #[arg(long)]
        set: String,
    },
    /// Materialize χ on every edge into a DSYC file
    Export {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum DaisyCmd {
    /// Search for a monochromatic daisy
    Find {
        /// A DSYC file, or one of: const0, const1, parity, random:SEED, chi:PHIFILE
        #[arg(long)]
        coloring: String,
        /// Ground set size (builtin colorings only)
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        /// Only simple daisies (kernel split around the petal set)
        #[arg(long)]
        simple: bool,
        /// Exit 1 if a witness is found
        #[arg(long)]
        expect_none: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Theta,
    FloorR,
}

#[derive(Subcommand, Debug)]
pub enum PipelineCmd {
    /// Preprocess, locate J, project, and check every step
    Run {
        /// JSON daisy: {"k0": [..], "m": [..], "k1": [..]} or {"kernel": [..], "m": [..]}
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        /// JSON overrides, e.g. {"mode": "floor_r"}
        #[arg(long)]
        cfg: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaArg {
    Main,
    Simple,
    SimpleInduction,
    Sandwich,
}

#[derive(Subcommand, Debug)]
pub enum BoundsCmd {
    /// Evaluate a bound exactly, or symbolically past the digit budget
    Eval {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, value_enum, default_value_t = FormulaArg::Main)]
        formula: FormulaArg,
        /// Constant override such as c=1/2 or c1=3; repeatable
        #[arg(long = "const")]
        consts: Vec<String>,
    },
}
