use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use chrono::{NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::Serialize;

use popmine::disambig::VocabularyConfig;
use popmine::indicators::series_to_json;
use popmine::ingest::{self, bundled_profiles, LanguagePolicy, LanguageProfile};
use popmine::kb::KnowledgeBase;
use popmine::mentions::{MatchOptions, SurfaceTrie};
use popmine::model::timestamp;
use popmine::pipeline::{self, PipelineConfig};
use popmine::sentiment::SentimentTrainConfig;
use popmine::store::DocumentStore;
use popmine::training;
use popmine::{Disambiguator, Error, Resources, SentimentClassifier};
use popmine_api::poller::{self, HttpFetcher};
use popmine_api::{AppState, ServiceConfig};

use crate::args::*;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Data(Error::Argument(_)) => 1,
            CliError::Data(_) | CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Ingest(IngestCommand::Jsonl(a)) => ingest_jsonl(a),
        Command::Ingest(IngestCommand::Feed(a)) => ingest_feed(a),
        Command::Extract(a) => extract(a),
        Command::Disambiguate(a) => disambiguate(a),
        Command::Sentiment(a) => sentiment(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Train(TrainCommand::Sentiment(a)) => train_sentiment(a),
        Command::Train(TrainCommand::Disambig(a)) => train_disambig(a),
        Command::Serve(a) => serve(a),
        Command::Pipeline(a) => run_pipeline(a),
        Command::Profile(a) => profile(a),
    }
}

fn write_output(out: &OutArg, body: &str) -> CliResult {
    match &out.out {
        Some(path) => popmine::io::write_atomic(path, body.as_bytes())?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))?;
        }
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    write_output(&OutArg { out: None }, &s)
}

fn policy(args: &LanguageArgs) -> CliResult<LanguagePolicy> {
    let mut profiles = if args.no_detect_language { Vec::new() } else { bundled_profiles() };
    if !args.no_detect_language {
        for path in &args.profiles {
            let p = LanguageProfile::load(path)?;
            profiles.retain(|q| q.lang != p.lang);
            profiles.push(p);
        }
    }
    Ok(LanguagePolicy { profiles, allow: args.allow.clone() })
}

fn resources(args: &ResourceArgs) -> CliResult<Resources> {
    Ok(Resources::load(args.clusters.as_deref(), args.embeddings.as_deref(), args.lexicon.as_deref())?)
}

fn load_kb(arg: &KbArg) -> CliResult<(KnowledgeBase, SurfaceTrie)> {
    let kb = KnowledgeBase::load(&arg.kb)?;
    let trie = SurfaceTrie::build(&kb, MatchOptions::default())?;
    Ok((kb, trie))
}

/// Explicit bounds, else the stored extent. `None` for an empty store with
/// no bounds given.
fn range(store: &DocumentStore, r: &RangeArgs) -> CliResult<Option<(NaiveDate, NaiveDate)>> {
    let (from, to) = match (r.from, r.to, store.date_range()) {
        (Some(f), Some(t), _) => (f, t),
        (f, t, Some((lo, hi))) => (f.unwrap_or(lo), t.unwrap_or(hi)),
        (Some(d), None, None) | (None, Some(d), None) => (d, d),
        (None, None, None) => return Ok(None),
    };
    if from > to {
        return Err(Error::Argument(format!("--from {from} is after --to {to}")).into());
    }
    Ok(Some((from, to)))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let raw = popmine::io::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| Error::Line { line: i + 1, message: e.to_string() })?;
        out.push(item);
    }
    Ok(out)
}

fn report_load(report: &ingest::LoadReport) {
    for (line, message) in &report.errors {
        eprintln!("line {line}: {message}");
    }
    eprintln!("stored {}, duplicates {}, rejected {}", report.stored, report.duplicates, report.errors.len());
}

fn ingest_jsonl(a: IngestJsonlArgs) -> CliResult {
    let store = DocumentStore::open(&a.store.store)?;
    let report = ingest::load_jsonl(&store, &a.input, &policy(&a.language)?)?;
    report_load(&report);
    print_json(&report)
}

fn ingest_feed(a: IngestFeedArgs) -> CliResult {
    let now = match &a.now {
        Some(t) => timestamp::parse(t)?,
        None => Utc::now(),
    };
    let raw = fs::read(&a.input).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", a.input.display())))?;
    let items = ingest::parse_feed(&raw)?;
    let store = DocumentStore::open(&a.store.store)?;
    let report = ingest::store_feed_items(&store, &items, a.source, now, &policy(&a.language)?)?;
    report_load(&report);
    print_json(&report)
}

fn extract(a: ExtractArgs) -> CliResult {
    let store = DocumentStore::open(&a.store.store)?;
    let (_, trie) = load_kb(&a.kb)?;
    let report = match range(&store, &a.range)? {
        Some((from, to)) => pipeline::extract(&store, &trie, &policy(&a.language)?, from, to)?,
        None => Default::default(),
    };
    eprintln!("extract: {} documents, {} skipped, {} mentions", report.documents, report.skipped, report.mentions);
    print_json(&report)
}

fn disambiguate(a: DisambiguateArgs) -> CliResult {
    let store = DocumentStore::open(&a.store.store)?;
    let kb = KnowledgeBase::load(&a.kb.kb)?;
    let model = Disambiguator::load(&a.model)?;
    let report = match range(&store, &a.range)? {
        Some((from, to)) => pipeline::disambiguate(&store, &kb, &model, from, to)?,
        None => Default::default(),
    };
    eprintln!("disambiguate: {} tweets, {} mentions", report.documents, report.mentions);
    print_json(&report)
}

fn sentiment(a: SentimentArgs) -> CliResult {
    let store = DocumentStore::open(&a.store.store)?;
    let model = SentimentClassifier::load(&a.model)?;
    let res = resources(&a.resources)?;
    let report = match range(&store, &a.range)? {
        Some((from, to)) => pipeline::classify_sentiment(&store, &model, &res, from, to)?,
        None => Default::default(),
    };
    eprintln!("sentiment: {} tweets, {} mentions", report.documents, report.mentions);
    print_json(&report)
}

fn aggregate(a: AggregateArgs) -> CliResult {
    let store = DocumentStore::open(&a.store.store)?;
    let kb = KnowledgeBase::load(&a.kb.kb)?;
    let presets = a.smoothing.presets();
    presets.validate()?;
    let series = match range(&store, &a.range)? {
        Some((from, to)) => pipeline::aggregate(&store, &kb, from, to, a.smoothing.smoothing, &presets)?,
        None => Vec::new(),
    };
    write_output(&a.out, &series_to_json(&series)?)
}

fn check_holdout(h: f64) -> CliResult {
    if !(0.0..1.0).contains(&h) {
        return Err(CliError::Usage(format!("--holdout must be in [0, 1), got {h}")));
    }
    Ok(())
}

fn train_sentiment(a: TrainSentimentArgs) -> CliResult {
    check_holdout(a.train.holdout)?;
    let examples = match (&a.examples, &a.store) {
        (Some(path), _) => read_jsonl(path)?,
        (None, Some(dir)) => training::sentiment_examples(&DocumentStore::open(dir)?)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let res = resources(&a.resources)?;
    let config = SentimentTrainConfig { train: a.train.config(), min_df: a.train.min_df };
    let (model, eval) = training::train_sentiment_holdout(&examples, &res, &config, a.train.holdout)?;
    model.save(&a.out)?;
    eprintln!("sentiment model: {} examples, {} iterations, written to {}", model.metadata.examples, model.metadata.iterations, a.out.display());
    print_json(&serde_json::json!({ "model": model.metadata, "heldout": eval }))
}

fn train_disambig(a: TrainDisambigArgs) -> CliResult {
    check_holdout(a.train.holdout)?;
    let examples = match (&a.examples, &a.store) {
        (Some(path), _) => read_jsonl(path)?,
        (None, Some(dir)) => training::disambig_examples(&DocumentStore::open(dir)?)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let kb = KnowledgeBase::load(&a.kb.kb)?;
    let vocab = VocabularyConfig { min_df: a.train.min_df, max_terms: a.max_terms };
    let (model, eval) = training::train_disambig_holdout(&kb, &examples, vocab, &a.train.config(), a.train.holdout)?;
    model.save(&a.out)?;
    eprintln!("disambiguation model: {} examples, {} iterations, written to {}", model.metadata.examples, model.metadata.iterations, a.out.display());
    print_json(&serde_json::json!({ "model": model.metadata, "heldout": eval }))
}

fn load_models(m: &ModelArgs) -> CliResult<(Option<SentimentClassifier>, Option<Disambiguator>)> {
    Ok((
        m.sentiment_model.as_ref().map(SentimentClassifier::load).transpose()?,
        m.disambig_model.as_ref().map(Disambiguator::load).transpose()?,
    ))
}

fn run_pipeline(a: PipelineArgs) -> CliResult {
    let store = DocumentStore::open(&a.store.store)?;
    let (kb, trie) = load_kb(&a.kb)?;
    let policy = policy(&a.language)?;
    let (sentiment, disambiguator) = load_models(&a.models)?;
    let res = resources(&a.resources)?;
    let presets = a.smoothing.presets();
    presets.validate()?;
    if let Some(input) = &a.input {
        report_load(&ingest::load_jsonl(&store, input, &policy)?);
    }
    let Some((from, to)) = range(&store, &a.range)? else {
        return write_output(&a.out, &series_to_json(&[])?);
    };
    let config = PipelineConfig {
        kb: &kb,
        trie: &trie,
        policy: &policy,
        disambiguator: disambiguator.as_ref(),
        sentiment: sentiment.as_ref().map(|m| (m, &res)),
        smoothing: a.smoothing.smoothing,
        presets: &presets,
    };
    let (report, series) = pipeline::run(&store, &config, from, to)?;
    eprintln!(
        "pipeline {from}..{to}: {} documents, {} skipped, {} mentions",
        report.extract.documents, report.extract.skipped, report.extract.mentions
    );
    write_output(&a.out, &series_to_json(&series)?)
}

fn profile(a: ProfileArgs) -> CliResult {
    let text = popmine::io::read_to_string(&a.input)?;
    let p = LanguageProfile::from_text(&a.lang, &text)?;
    write_output(&a.out, &p.to_tsv())
}

fn serve(a: ServeArgs) -> CliResult {
    let store = Arc::new(DocumentStore::open(&a.store.store)?);
    let kb = KnowledgeBase::load(&a.kb.kb)?;
    let (sentiment, disambiguator) = load_models(&a.models)?;
    let feeds = a.feeds.as_deref().map(ingest::load_feed_list).transpose()?;
    let mut config = ServiceConfig::new(store, kb);
    config.resources = resources(&a.resources)?;
    config.presets = a.smoothing.presets();
    config.policy = policy(&a.language)?;
    config.sentiment = sentiment;
    config.disambiguator = disambiguator;
    config.model_dir = a.model_dir.clone();
    config.token = a.token.clone();
    config.retrain_timeout = Duration::from_secs(a.retrain_timeout_secs);
    config.sentiment_train.train.seed = a.seed;
    config.disambig_train.seed = a.seed;
    let state = AppState::new(config)?;
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address {}:{}: {e}", a.host, a.port)))?;

    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot listen on {addr}: {e}")))?;
        eprintln!("listening on http://{addr}");
        let (stop_tx, stop_rx) = tokio::sync::watch::channel(false);
        let poller = match feeds {
            Some(feeds) if !feeds.is_empty() => {
                let fetcher = HttpFetcher::new(Duration::from_secs(30))
                    .map_err(|e| CliError::Runtime(format!("cannot build HTTP client: {e}")))?;
                let interval = Duration::from_secs(a.poll_minutes.max(1) * 60);
                Some(tokio::spawn(poller::run(state.clone(), feeds, Arc::new(fetcher), interval, stop_rx)))
            }
            _ => None,
        };
        let shutdown = async move {
            popmine_api::shutdown_signal().await;
            eprintln!("shutting down");
            let _ = stop_tx.send(true);
        };
        popmine_api::serve(listener, state, shutdown)
            .await
            .map_err(|e| CliError::Runtime(format!("server error: {e}")))?;
        if let Some(p) = poller {
            let _ = p.await;
        }
        Ok(())
    })
}
