use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "fewsel",
    version,
    about = "Select target-language examples to annotate for few-shot transfer"
)]
pub struct Cli {
    /// Worker threads; results are identical for any value.
    #[arg(long, global = true, env = "FEWSEL_THREADS")]
    pub threads: Option<usize>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pick k examples from a corpus with one strategy.
    #[command(after_help = GRID_HELP)]
    Select(SelectArgs),
    /// Dump per-example diagnostics (entropies, embedding norms, n-gram model).
    Score(ScoreArgs),
    /// Run strategies on synthetic transfer tasks and report accuracy gains.
    #[command(after_help = SIM_HELP)]
    Simulate(SimulateArgs),
    /// Statistics helpers.
    #[command(subcommand)]
    Stats(StatsCommand),
}

const GRID_HELP: &str = "\
Usual grids: k in {10, 50, 100, 500, 1000}; lambda in {0, 0.5, 1}; gamma in {0, 1, 2, 3}.
Strategies: rand, dce, pe (needs token distributions), ge (distributions + hidden states,
plus sentence embeddings when gamma > 0), le (distributions).";

const SIM_HELP: &str = "\
Strategy syntax: name[:key=value+key=value], e.g. rand, pe:lambda=1, ge:gamma=1+lambda=0.5, dce:g=5.
Budgets: comma list; `pool` stands for the pool size. Seeds: `A..B` (inclusive) or a comma list.
Usual grids: k in {10, 50, 100, 500, 1000}; lambda in {0, 0.5, 1}; gamma in {0, 1, 2, 3}.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Rand,
    Dce,
    Pe,
    Ge,
    Le,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Sign {
    Prose,
    Eq3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FirstPick {
    Norm,
    Uniform,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus in JSON Lines: {"id", "tokens", "text"?, "label"?} per line.
    #[arg(long)]
    pub corpus: PathBuf,

    /// Model outputs for the corpus (binary container or its text form).
    #[arg(long)]
    pub tensors: Option<PathBuf>,

    /// Keep duplicate sentences instead of dropping later copies.
    #[arg(long)]
    pub keep_duplicates: bool,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum)]
    pub strategy: Strategy,

    /// Number of examples to select.
    #[arg(long)]
    pub k: usize,

    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// PE: zone offset in standard deviations. GE/LE: norm filter threshold.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,

    /// GE: nearest neighbours added per center [0-3].
    #[arg(long)]
    pub gamma: Option<usize>,

    /// DCE: sentences moved per round [default: 10].
    #[arg(long)]
    pub dce_g: Option<usize>,

    /// DCE: order of the entropy difference.
    #[arg(long, value_enum, default_value_t = Sign::Prose)]
    pub dce_sign: Sign,

    /// DCE: n-gram order.
    #[arg(long, default_value_t = 3)]
    pub ngram_order: usize,

    /// GE/LE: how the first k-means++ center is drawn.
    #[arg(long, value_enum, default_value_t = FirstPick::Norm)]
    pub kpp_first: FirstPick,

    /// GE: leave the bias block out of gradient embeddings.
    #[arg(long)]
    pub ge_no_bias: bool,

    /// Where to write the selection (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScoreWhat {
    Pe,
    GeNorm,
    LeNorm,
    LmDump,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum)]
    pub what: ScoreWhat,

    /// n-gram order for lm-dump.
    #[arg(long, default_value_t = 3)]
    pub ngram_order: usize,

    /// ge-norm: leave the bias block out.
    #[arg(long)]
    pub ge_no_bias: bool,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Task settings (JSON object), or a JSON array of {"name", "category", "task"} units.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Comma-separated strategies.
    #[arg(long, default_value = "rand,dce,pe:lambda=1,ge,le")]
    pub strategies: String,

    /// Comma-separated budgets.
    #[arg(long, default_value = "10,50,100")]
    pub ks: String,

    #[arg(long, default_value = "0..19")]
    pub seeds: String,

    /// Keep training the zero-shot model instead of retraining from scratch.
    #[arg(long)]
    pub continue_training: bool,

    /// Where to write the report (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Paired two-sided t-test of a against b.
    Ttest(TtestArgs),
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    /// Comma-separated values, or a file of numbers.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,

    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
}
