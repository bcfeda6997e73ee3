//! `cogroup` command-line pipeline.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::LazyLock;

use clap::{Args, Parser, Subcommand};
use cogroup::ga::PenaltyMode;
use cogroup::ingest::Orientation;
use cogroup::model_select::AicFormula;
use cogroup::ErrorCategory;

static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (table format {})",
        env!("CARGO_PKG_VERSION"),
        cogroup::FORMAT_VERSION
    )
});

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(cogroup::Error),
}

impl From<cogroup::Error> for CliError {
    fn from(e: cogroup::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Parse => 3,
                ErrorCategory::Validation => 4,
                ErrorCategory::Numeric => 5,
                ErrorCategory::Io => 6,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e @ cogroup::Error::Parse { .. }) => write!(f, "parse error: {e}"),
            CliError::Core(e @ cogroup::Error::Io { .. }) => write!(f, "io error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cogroup", version = VERSION.as_str(), about = "Discover functional co-response groups of taxa")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Filter sparse taxa, normalize, and join the functional variable.
    Ingest(IngestArgs),
    /// Infer a co-occurrence network from a dataset.
    InferNet(InferNetArgs),
    /// Choose the group size by AIC over a range of size caps.
    SelectK(SelectKArgs),
    /// Search for the co-response group and aggregate taxon importance.
    Discover(DiscoverArgs),
    /// Score methods on repeated stratified splits and compare them.
    Evaluate(EvaluateArgs),
    /// Cluster the network and locate the important taxa within it.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic dataset with a planted group.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub abundance: PathBuf,
    #[arg(long)]
    pub function: PathBuf,
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationArg>,
    #[arg(long)]
    pub max_zero_fraction: Option<f64>,
    #[arg(long)]
    pub css_quantile: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum OrientationArg {
    SamplesAsRows,
    TaxaAsRows,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::SamplesAsRows => Orientation::SamplesAsRows,
            OrientationArg::TaxaAsRows => Orientation::TaxaAsRows,
        }
    }
}

#[derive(Args, Debug)]
pub struct InferNetArgs {
    /// Directory holding abundance.tsv and function.tsv.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Adjacency matrix or edge list over the dataset's taxa.
    #[arg(long, conflicts_with = "no_graph")]
    pub adjacency: Option<PathBuf>,
    /// Use raw group abundance instead of convolving over a network.
    #[arg(long)]
    pub no_graph: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GaArgs {
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub stagnation: Option<usize>,
    #[arg(long)]
    pub crossover: Option<f64>,
    #[arg(long)]
    pub mutation: Option<f64>,
    #[arg(long)]
    pub elite_fraction: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SelectKArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Searches per group size.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, value_enum)]
    pub aic_formula: Option<AicArg>,
    #[command(flatten)]
    pub ga: GaArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum AicArg {
    Standard,
    Literal,
}

impl From<AicArg> for AicFormula {
    fn from(a: AicArg) -> Self {
        match a {
            AicArg::Standard => AicFormula::Standard,
            AicArg::Literal => AicFormula::Literal,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    SizeCap,
    L1,
}

impl From<ModeArg> for PenaltyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SizeCap => PenaltyMode::SizeCap,
            ModeArg::L1 => PenaltyMode::L1,
        }
    }
}

#[derive(Args, Debug)]
pub struct DiscoverArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Group size cap in size-cap mode.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated l1 penalties to tune over.
    #[arg(long, value_delimiter = ',')]
    pub mu_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Number of most important taxa to report.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[command(flatten)]
    pub ga: GaArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Required when any graph method is listed.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    /// Comma-separated methods: graph, graph-l1, baseline, baseline-l1.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub mu_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub split_fraction: Option<f64>,
    #[arg(long)]
    pub strata: Option<usize>,
    #[command(flatten)]
    pub ga: GaArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub adjacency: PathBuf,
    /// Node table written by `discover` (importance_nodes.tsv).
    #[arg(long)]
    pub importance: PathBuf,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub louvain_seeds: Option<usize>,
    #[arg(long)]
    pub edge_threshold: Option<f64>,
    #[arg(long)]
    pub display_threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub n_taxa: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub intra: Option<f64>,
    #[arg(long)]
    pub inter: Option<f64>,
    /// Comma-separated 0-based taxon indices of the planted group.
    #[arg(long, value_delimiter = ',')]
    pub planted: Option<Vec<usize>>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub log_sd: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without parallel support; --threads {n} ignored");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = init_threads(cli.threads).and_then(|_| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cogroup: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
