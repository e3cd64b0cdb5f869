//! `mtmeval` command-line front end.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, malformed
//! or inconsistent data), 2 on I/O errors.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<mtmeval::Error> for CliError {
    fn from(e: mtmeval::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mtmeval", version, about = "Interpretable evaluation of MT metrics against MQM judgments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a public WMT MQM export into the canonical mqm.tsv layout
    ConvertWmt(ConvertArgs),
    /// Precision/Recall/F at a fixed threshold
    Classify(ClassifyArgs),
    /// Threshold maximizing F, on the test set or transferred from a dev set
    Optimize(OptimizeArgs),
    /// Re-ranking precision and average MQM of the selected translations
    Rerank(RerankArgs),
    /// Re-ranking with MBR utilities computed from pairwise scores
    Mbr(MbrArgs),
    /// Segment-grouped Kendall τ-b, Pearson ρ and acc_eq
    Correlate(CorrelateArgs),
    /// MQM distance below the class threshold of each false positive
    FpAnalysis(FpArgs),
    /// Generate (and optionally evaluate) the Random-sysname baseline
    RandomBaseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file with defaults for the flags below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for report.json and tables/
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HumanArgs {
    /// MQM annotations (canonical mqm.tsv)
    #[arg(long, conflicts_with = "human")]
    pub mqm: Option<PathBuf>,
    /// Precomputed per-translation MQM scores (system, seg_id, mqm)
    #[arg(long)]
    pub human: Option<PathBuf>,
    /// MQM weights: major non-translation, major, minor punctuation, minor
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
    /// Language pair recorded in the report
    #[arg(long)]
    pub lp: Option<String>,
    /// How score tables are joined with human scores: strict | intersect
    #[arg(long)]
    pub join: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassArgs {
    /// Class specs: good, perfect, or h>=<value> (repeatable or comma separated)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub spec: Vec<String>,
    /// F_β weight (default 1/√2)
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// WMT MQM export (system doc doc_id seg_id rater source target category severity)
    #[arg(long)]
    pub input: PathBuf,
    /// Canonical mqm.tsv to write
    #[arg(long)]
    pub output: PathBuf,
    /// Language pair column to add to every row
    #[arg(long)]
    pub lp: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub human: HumanArgs,
    #[command(flatten)]
    pub class: ClassArgs,
    /// Segment score files (one metric each)
    #[arg(long, required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// Threshold applied to every metric and class
    #[arg(long, allow_negative_numbers = true, conflicts_with = "thresholds")]
    pub tau: Option<f64>,
    /// report.json of an `optimize` run supplying per-metric thresholds
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub human: HumanArgs,
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// Development-set MQM annotations; thresholds are tuned there
    #[arg(long, conflicts_with = "dev_human")]
    pub dev_mqm: Option<PathBuf>,
    /// Development-set precomputed MQM scores
    #[arg(long)]
    pub dev_human: Option<PathBuf>,
    /// Development-set score files
    #[arg(long, num_args = 1..)]
    pub dev_scores: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub human: HumanArgs,
    #[arg(long, required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// Metric scores within this distance of the best count as tied
    #[arg(long)]
    pub tie_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MbrArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub human: HumanArgs,
    /// Pairwise score files (metric, seg_id, hyp_system, ref_system, score)
    #[arg(long, required = true, num_args = 1..)]
    pub pairwise: Vec<PathBuf>,
    #[arg(long)]
    pub tie_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub human: HumanArgs,
    #[arg(long, required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// kendall_tau_b, pearson, acc_eq (default: all)
    #[arg(long, value_delimiter = ',')]
    pub coefficient: Vec<String>,
    /// Metric tie epsilon for acc_eq
    #[arg(long)]
    pub tie_eps: Option<f64>,
    /// Also report acc_eq at the epsilon that maximizes it
    #[arg(long)]
    pub calibrate_eps: bool,
}

#[derive(Debug, Args)]
pub struct FpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub human: HumanArgs,
    #[command(flatten)]
    pub class: ClassArgs,
    /// One segment score file
    #[arg(long)]
    pub scores: PathBuf,
    /// Metric threshold; defaults to the F-optimal one on this data
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Histogram bin width in MQM points
    #[arg(long)]
    pub bin_width: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub human: HumanArgs,
    #[command(flatten)]
    pub class: ClassArgs,
    /// Number of synthetic systems when no human scores are given
    #[arg(long, default_value_t = 15)]
    pub systems: usize,
    /// Number of synthetic segments when no human scores are given
    #[arg(long, default_value_t = 1177)]
    pub segs: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mean_low: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mean_high: Option<f64>,
    #[arg(long)]
    pub stddev: Option<f64>,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
