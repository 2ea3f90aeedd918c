use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use limitlens_core::analytics::Quantity;
use limitlens_core::DeviceClass;

#[derive(Debug, Parser)]
#[command(name = "limitlens", version, about = "Tweet length distributions around a character limit")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Seed for every random draw; recorded in each output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read archive shards into a histogram store.
    Ingest(IngestArgs),
    /// Inspect a histogram store.
    #[command(subcommand)]
    Hist(HistCommand),
    /// Fit the length model to one day's histogram.
    Fit(FitArgs),
    /// Solve for the limit with a target run-over.
    SolveLimit(SolveLimitArgs),
    /// Run the editing simulator.
    Simulate(SimulateArgs),
    /// One estimate per day, with a rolling mean.
    Daily(DailyArgs),
    /// Difference-in-differences on log mean length.
    Did(DidArgs),
    /// Thread-length distribution from pagination markers.
    Threads(ThreadsArgs),
    /// Lexicon category frequency by length.
    Curves(CurvesArgs),
    /// Spearman correlation of two CSV columns.
    Correlate(CorrelateArgs),
    /// Ingest plus the standard analyses in one run.
    Report(ReportArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CorpusArgs {
    /// Shard files or directories.
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,

    /// Counting rules: auto, pre2017, post2017 or a config file.
    #[arg(long = "config", default_value = "auto")]
    pub counting: String,

    /// Filter config (TOML); defaults to the built-in one.
    #[arg(long)]
    pub filter: Option<PathBuf>,

    /// Longest weighted length kept.
    #[arg(long, default_value_t = limitlens_core::histstore::DEFAULT_MAX_LEN)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Store path; a `.gz` suffix compresses it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct Selection {
    /// Comma-separated languages; all by default.
    #[arg(long, value_delimiter = ',')]
    pub langs: Vec<String>,

    /// Comma-separated device classes.
    #[arg(long, value_delimiter = ',', default_values = ["web", "mobile"])]
    pub devices: Vec<DeviceClass>,
}

#[derive(Debug, Subcommand)]
pub enum HistCommand {
    /// Print the merged histogram of a selection.
    Query(HistQueryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HistFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct HistQueryArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long)]
    pub from: Option<NaiveDate>,
    #[arg(long)]
    pub to: Option<NaiveDate>,
    #[arg(long, value_enum, default_value_t = HistFormat::Csv)]
    pub format: HistFormat,
}

#[derive(Debug, Args, Clone)]
pub struct DayFitArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub day: NaiveDate,
    #[command(flatten)]
    pub selection: Selection,
    /// Enforced limit; by default 140 before the switch and 280 after.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub day: DayFitArgs,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveLimitArgs {
    /// Target run-over fraction in (0, 1).
    #[arg(long)]
    pub target: f64,
    /// Fit parameters given directly instead of a stored day.
    #[arg(long, requires = "sigma", conflicts_with = "store")]
    pub mu: Option<f64>,
    #[arg(long, requires = "mu")]
    pub sigma: Option<f64>,
    #[arg(long, requires = "day")]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub day: Option<NaiveDate>,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 3.9)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.9)]
    pub sigma: f64,
    #[arg(long, default_value_t = 140)]
    pub limit: usize,
    #[arg(long, default_value_t = 0.7)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 20)]
    pub max_rounds: usize,
    #[arg(long)]
    pub jitter: bool,
    /// Number of drafts.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    /// Histogram CSV; the JSON summary goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DailyArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// cramming, cramming@L, fraction@c, runover@c or solved@r.
    #[arg(long, default_value = "cramming")]
    pub quantity: Quantity,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long)]
    pub from: Option<NaiveDate>,
    #[arg(long)]
    pub to: Option<NaiveDate>,
    #[arg(long, default_value_t = 10)]
    pub rolling: usize,
    /// Use one limit for every day instead of 140/280 around the switch.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Series CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also draw the series as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Bootstrap CI of the mean over days, written as JSON.
    #[arg(long)]
    pub ci: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
}

#[derive(Debug, Args)]
pub struct DidArgs {
    /// A store measured in code points (`ingest --config pre2017`), so the
    /// unit does not change between periods.
    #[arg(long)]
    pub store: PathBuf,
    /// Treated and control languages come from here.
    #[arg(long)]
    pub filter: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub treated: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub control: Vec<String>,
    /// Inclusive span FROM:TO.
    #[arg(long, default_value = "2017-01-01:2017-10-31", value_parser = parse_span)]
    pub pre: (NaiveDate, NaiveDate),
    #[arg(long, default_value = "2019-01-01:2019-10-31", value_parser = parse_span)]
    pub post: (NaiveDate, NaiveDate),
    #[arg(long, value_delimiter = ',', default_values = ["web", "mobile"])]
    pub devices: Vec<DeviceClass>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThreadsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Sampling rate of the archive.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = limitlens_core::analytics::DEFAULT_MAX_THREAD)]
    pub max_k: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Long-format CSV: category,length,tweets,freq,enrichment.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Add the exact permutation p-value (at most 10 rows).
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Adds category curves to the report.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub rolling: usize,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    /// Difference-in-differences periods, FROM:TO.
    #[arg(long, default_value = "2017-01-01:2017-10-31", value_parser = parse_span)]
    pub pre: (NaiveDate, NaiveDate),
    #[arg(long, default_value = "2019-01-01:2019-10-31", value_parser = parse_span)]
    pub post: (NaiveDate, NaiveDate),
    /// Skip the SVG charts.
    #[arg(long)]
    pub no_svg: bool,
}

pub fn parse_span(s: &str) -> Result<(NaiveDate, NaiveDate), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected FROM:TO, got {s:?}"))?;
    let from: NaiveDate = a.parse().map_err(|e| format!("{a:?}: {e}"))?;
    let to: NaiveDate = b.parse().map_err(|e| format!("{b:?}: {e}"))?;
    if from > to {
        return Err(format!("span {s} is inverted"));
    }
    Ok((from, to))
}
