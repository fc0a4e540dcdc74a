use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{ArgGroup, Args, Parser, Subcommand};

use popmine::indicators::{PresetTable, Smoothing};
use popmine::model::Source;

#[derive(Debug, Parser)]
#[command(name = "popmine", version, about = "Track mentions and opinion about political entities in news, blogs and tweets")]
pub struct Cli {
    /// File of `key = value` lines used as defaults for the subcommand's flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load documents into the store
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Find entity mentions in stored documents
    Extract(ExtractArgs),
    /// Decide which tweet mentions refer to the entity
    Disambiguate(DisambiguateArgs),
    /// Label tweets positive, negative or neutral
    Sentiment(SentimentArgs),
    /// Write daily indicator series as JSON
    Aggregate(AggregateArgs),
    /// Fit a classifier and write the model file
    #[command(subcommand)]
    Train(TrainCommand),
    /// Run the HTTP service
    Serve(ServeArgs),
    /// Run every stage over a date range and write the indicators
    Pipeline(PipelineArgs),
    /// Build a language profile from sample text
    Profile(ProfileArgs),
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    /// One JSON document per line
    Jsonl(IngestJsonlArgs),
    /// A saved RSS 2.0 or Atom file
    Feed(IngestFeedArgs),
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Store directory, created if missing
    #[arg(long, value_name = "DIR")]
    pub store: PathBuf,
}

#[derive(Debug, Args)]
pub struct KbArg {
    /// Knowledge base, one JSON entity per line
    #[arg(long, value_name = "FILE")]
    pub kb: PathBuf,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    /// First day (YYYY-MM-DD); defaults to the earliest stored day
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last day, inclusive; defaults to the latest stored day
    #[arg(long)]
    pub to: Option<NaiveDate>,
}

#[derive(Debug, Args)]
pub struct LanguageArgs {
    /// Languages that go on to extraction
    #[arg(long, value_delimiter = ',', default_value = "pt")]
    pub allow: Vec<String>,
    /// Extra language profile (TSV); replaces a bundled one of the same language
    #[arg(long = "profile", value_name = "FILE")]
    pub profiles: Vec<PathBuf>,
    /// Leave `lang` unset on documents that do not declare it
    #[arg(long)]
    pub no_detect_language: bool,
}

#[derive(Debug, Args)]
pub struct ResourceArgs {
    /// Word clusters, `bitpath<TAB>word`
    #[arg(long, value_name = "FILE")]
    pub clusters: Option<PathBuf>,
    /// Word vectors, header `V D` then `word f1 .. fD`
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Polarity lexicon, `word<TAB>-1|1`
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmoothingArgs {
    #[arg(long, default_value = "default")]
    pub smoothing: Smoothing,
    /// q/r of the reactive preset
    #[arg(long, default_value_t = PresetTable::default().reactive)]
    pub q_reactive: f64,
    /// q/r of the default preset
    #[arg(long, default_value_t = PresetTable::default().default)]
    pub q_default: f64,
    /// q/r of the smooth preset
    #[arg(long, default_value_t = PresetTable::default().smooth)]
    pub q_smooth: f64,
}

impl SmoothingArgs {
    pub fn presets(&self) -> PresetTable {
        PresetTable { reactive: self.q_reactive, default: self.q_default, smooth: self.q_smooth }
    }
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Write results here instead of standard output
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestJsonlArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub language: LanguageArgs,
}

#[derive(Debug, Args)]
pub struct IngestFeedArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub store: StoreArg,
    /// news or blog
    #[arg(long)]
    pub source: Source,
    /// Timestamp for items without a date (RFC 3339); defaults to the clock
    #[arg(long)]
    pub now: Option<String>,
    #[command(flatten)]
    pub language: LanguageArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub kb: KbArg,
    #[command(flatten)]
    pub range: RangeArgs,
    #[command(flatten)]
    pub language: LanguageArgs,
}

#[derive(Debug, Args)]
pub struct DisambiguateArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub kb: KbArg,
    /// Disambiguation model file
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args)]
pub struct SentimentArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// Sentiment model file
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub kb: KbArg,
    #[command(flatten)]
    pub range: RangeArgs,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// L2 strength
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    /// Stop once the loss improves by less than this
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Fraction of each class held out for evaluation; 0 trains on everything
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
    #[arg(long, default_value_t = 2)]
    pub min_df: usize,
}

impl TrainArgs {
    pub fn config(&self) -> popmine::linear::TrainConfig {
        popmine::linear::TrainConfig {
            lambda: self.lambda,
            max_iterations: self.iterations,
            tolerance: self.tolerance,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    Sentiment(TrainSentimentArgs),
    Disambig(TrainDisambigArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("examples_source").required(true).args(["examples", "store"])))]
pub struct TrainSentimentArgs {
    /// Labelled examples, `{"text", "label"}` per line
    #[arg(long, value_name = "FILE")]
    pub examples: Option<PathBuf>,
    /// Train on the store's annotation log instead
    #[arg(long, value_name = "DIR")]
    pub store: Option<PathBuf>,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Model file to write
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("examples_source").required(true).args(["examples", "store"])))]
pub struct TrainDisambigArgs {
    /// Labelled examples, `{"text", "entity_id", "surface", "related"}` per line
    #[arg(long, value_name = "FILE")]
    pub examples: Option<PathBuf>,
    /// Train on the store's annotation log instead
    #[arg(long, value_name = "DIR")]
    pub store: Option<PathBuf>,
    #[command(flatten)]
    pub kb: KbArg,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, default_value_t = 5000)]
    pub max_terms: usize,
    /// Model file to write
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_name = "FILE")]
    pub sentiment_model: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub disambig_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub kb: KbArg,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[command(flatten)]
    pub language: LanguageArgs,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Require this bearer token on /api/v1
    #[arg(long)]
    pub token: Option<String>,
    /// Where retrained models are written
    #[arg(long, value_name = "DIR")]
    pub model_dir: Option<PathBuf>,
    /// Feed list, `URL SOURCE` per line
    #[arg(long, value_name = "FILE")]
    pub feeds: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    pub poll_minutes: u64,
    #[arg(long, default_value_t = 300)]
    pub retrain_timeout_secs: u64,
    /// Seed for the held-out split and the optimizer on retrain
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub kb: KbArg,
    /// Load this JSONL file into the store first
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[command(flatten)]
    pub language: LanguageArgs,
    #[command(flatten)]
    pub range: RangeArgs,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Sample text in the language
    pub input: PathBuf,
    /// ISO 639-1 code
    #[arg(long)]
    pub lang: String,
    #[command(flatten)]
    pub out: OutArg,
}
