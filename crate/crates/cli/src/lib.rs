//! The `semrec` command line: dataset statistics, similarity caches, model
//! training, recommendation, and cross-validated evaluation.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use semrec_core::cf::{AlsConfig, BprConfig, ConfidenceScaling};
use semrec_core::hybrid::{Algorithm, FusionMode};
use semrec_core::ontology::{Metric, SharedIcMode};
use semrec_core::semantic::ProfileWeighting;
use semrec_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "semrec", version, about = "Hybrid ontology-aware recommender")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat key = value file; keys are flag names without the dashes.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dataset statistics.
    Stats(StatsArgs),
    /// Precompute the item×item similarity table.
    BuildCache(BuildCacheArgs),
    /// Train an ALS or BPR model on the full ratings file.
    Train(TrainArgs),
    /// Rank a user's unrated items.
    Recommend(RecommendArgs),
    /// Cross-validated evaluation of one or more algorithms.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// `user,item,rating` triples; a header line is detected automatically.
    #[arg(long, value_name = "FILE")]
    pub ratings: PathBuf,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IcChoice {
    Intrinsic,
    Extrinsic,
}

#[derive(Debug, Args)]
pub struct OntologyArgs {
    /// OBO ontology, optionally gzip-compressed.
    #[arg(long, value_name = "FILE")]
    pub obo: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = IcChoice::Intrinsic)]
    pub ic: IcChoice,
    /// `term,count` annotation counts for extrinsic IC.
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// resnik, lin or jc.
    #[arg(long, default_value_t = Metric::Lin)]
    pub metric: Metric,
    /// dishin or mica.
    #[arg(long = "shared-ic", default_value_t = SharedIcMode::Dishin)]
    pub shared_ic: SharedIcMode,
}

#[derive(Debug, Args)]
pub struct AlsArgs {
    #[arg(id = "als-factors", long = "als-factors", default_value_t = AlsConfig::default().factors)]
    pub factors: usize,
    #[arg(id = "als-alpha", long = "als-alpha", default_value_t = AlsConfig::default().alpha)]
    pub alpha: f64,
    #[arg(id = "als-lambda", long = "als-lambda", default_value_t = AlsConfig::default().lambda)]
    pub lambda: f64,
    #[arg(id = "als-iterations", long = "als-iterations", default_value_t = AlsConfig::default().iterations)]
    pub iterations: usize,
    /// linear or log.
    #[arg(id = "als-confidence", long = "als-confidence", default_value_t = ConfidenceScaling::Linear)]
    pub confidence: ConfidenceScaling,
}

impl AlsArgs {
    pub fn config(&self, seed: u64) -> AlsConfig {
        AlsConfig {
            factors: self.factors,
            alpha: self.alpha,
            lambda: self.lambda,
            iterations: self.iterations,
            confidence: self.confidence,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct BprArgs {
    #[arg(id = "bpr-factors", long = "bpr-factors", default_value_t = BprConfig::default().factors)]
    pub factors: usize,
    #[arg(id = "bpr-learning-rate", long = "bpr-learning-rate", default_value_t = BprConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(id = "bpr-lambda-user", long = "bpr-lambda-user", default_value_t = BprConfig::default().lambda_user)]
    pub lambda_user: f64,
    #[arg(id = "bpr-lambda-item-pos", long = "bpr-lambda-item-pos", default_value_t = BprConfig::default().lambda_item_pos)]
    pub lambda_item_pos: f64,
    #[arg(id = "bpr-lambda-item-neg", long = "bpr-lambda-item-neg", default_value_t = BprConfig::default().lambda_item_neg)]
    pub lambda_item_neg: f64,
    #[arg(id = "bpr-epochs", long = "bpr-epochs", default_value_t = BprConfig::default().epochs)]
    pub epochs: usize,
    /// Defaults to the number of training ratings.
    #[arg(id = "bpr-samples-per-epoch", long = "bpr-samples-per-epoch")]
    pub samples_per_epoch: Option<usize>,
}

impl BprArgs {
    pub fn config(&self, seed: u64) -> BprConfig {
        BprConfig {
            factors: self.factors,
            learning_rate: self.learning_rate,
            lambda_user: self.lambda_user,
            lambda_item_pos: self.lambda_item_pos,
            lambda_item_neg: self.lambda_item_neg,
            epochs: self.epochs,
            samples_per_epoch: self.samples_per_epoch,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct RankingArgs {
    /// raw or normalized.
    #[arg(long, default_value_t = FusionMode::Raw)]
    pub fusion: FusionMode,
    /// uniform or rating.
    #[arg(long, default_value_t = ProfileWeighting::Uniform)]
    pub weighting: ProfileWeighting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = StatsFormat::Table)]
    pub format: StatsFormat,
}

#[derive(Debug, Args)]
pub struct BuildCacheArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub ontology: OntologyArgs,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CfChoice {
    Als,
    Bpr,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub algorithm: CfChoice,
    #[command(flatten)]
    pub als: AlsArgs,
    #[command(flatten)]
    pub bpr: BprArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecommendFormat {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub ontology: OntologyArgs,
    /// Similarity cache from `build-cache`; built in memory when absent.
    #[arg(long, value_name = "FILE")]
    pub cache: Option<PathBuf>,
    /// Model from `train`; required for ALS and BPR based algorithms.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// ALS, BPR, ONTO, ALS_ONTO or BPR_ONTO.
    #[arg(long)]
    pub algorithm: Algorithm,
    /// External user id as it appears in the ratings file.
    #[arg(long)]
    pub user: String,
    /// Number of rows to print; all candidates when absent.
    #[arg(long)]
    pub top: Option<usize>,
    #[command(flatten)]
    pub ranking: RankingArgs,
    #[arg(long, value_enum, default_value_t = RecommendFormat::Tsv)]
    pub format: RecommendFormat,
    /// Write here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub ontology: OntologyArgs,
    #[arg(long, value_name = "FILE")]
    pub cache: Option<PathBuf>,
    /// Comma-separated subset of ALS, BPR, ONTO, ALS_ONTO, BPR_ONTO.
    #[arg(long, default_value = "ALS,BPR,ONTO,ALS_ONTO,BPR_ONTO")]
    pub algorithms: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long = "k-max", default_value_t = 20)]
    pub k_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub als: AlsArgs,
    #[command(flatten)]
    pub bpr: BprArgs,
    #[command(flatten)]
    pub ranking: RankingArgs,
    /// Receives folds.csv, aggregate.csv and manifest.json.
    #[arg(long = "out-dir", value_name = "DIR")]
    pub out_dir: PathBuf,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

/// Finds `--config` and the subcommand name in raw arguments, before
/// clap sees them; required flags may only be present in the file.
fn scan_config(root: &clap::Command, args: &[OsString]) -> (Option<PathBuf>, Option<String>) {
    let mut config = None;
    let mut subcommand = None;
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let Some(s) = arg.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            config = iter.next().map(PathBuf::from);
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if subcommand.is_none() && root.find_subcommand(s).is_some() {
            subcommand = Some(s.to_owned());
        }
    }
    (config, subcommand)
}

fn parse(args: Vec<OsString>) -> Result<Cli, i32> {
    let report = |e: clap::Error| {
        let _ = e.print();
        if e.use_stderr() {
            EXIT_CONFIG
        } else {
            EXIT_OK
        }
    };
    let root = Cli::command();
    let args = match scan_config(&root, &args) {
        (Some(path), Some(sub)) => config::read_config(&path)
            .and_then(|entries| config::splice(&root, args, &sub, &entries))
            .map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?,
        _ => args,
    };
    Cli::try_parse_from(args).map_err(report)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(args) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();

    match commands::dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
