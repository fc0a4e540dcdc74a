use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use chrono::{DateTime, Utc};
use popmine::disambig::VocabularyConfig;
use popmine::indicators::PresetTable;
use popmine::ingest::LanguagePolicy;
use popmine::kb::KnowledgeBase;
use popmine::linear::TrainConfig;
use popmine::mentions::{MatchOptions, SurfaceTrie};
use popmine::pipeline::PipelineConfig;
use popmine::sentiment::SentimentTrainConfig;
use popmine::store::DocumentStore;
use popmine::training::DEFAULT_HOLDOUT;
use popmine::{Disambiguator, Resources, SentimentClassifier};

pub const SENTIMENT_MODEL_FILE: &str = "sentiment.json";
pub const DISAMBIG_MODEL_FILE: &str = "disambig.json";

/// Everything the service needs, already loaded.
pub struct ServiceConfig {
    pub store: Arc<DocumentStore>,
    pub kb: KnowledgeBase,
    pub resources: Resources,
    pub presets: PresetTable,
    pub policy: LanguagePolicy,
    pub sentiment: Option<SentimentClassifier>,
    pub disambiguator: Option<Disambiguator>,
    /// Retrained models are written here as `sentiment.json` and `disambig.json`.
    pub model_dir: Option<PathBuf>,
    /// When set, `/api/v1` requires `Authorization: Bearer <token>`.
    pub token: Option<String>,
    pub retrain_timeout: Duration,
    pub holdout: f64,
    pub sentiment_train: SentimentTrainConfig,
    pub disambig_train: TrainConfig,
    pub disambig_vocab: VocabularyConfig,
}

impl ServiceConfig {
    pub fn new(store: Arc<DocumentStore>, kb: KnowledgeBase) -> Self {
        ServiceConfig {
            store,
            kb,
            resources: Resources::empty(),
            presets: PresetTable::default(),
            policy: LanguagePolicy::default(),
            sentiment: None,
            disambiguator: None,
            model_dir: None,
            token: None,
            retrain_timeout: Duration::from_secs(300),
            holdout: DEFAULT_HOLDOUT,
            sentiment_train: SentimentTrainConfig::default(),
            disambig_train: TrainConfig::default(),
            disambig_vocab: VocabularyConfig::default(),
        }
    }
}

/// The serving models. Replaced as a whole, so a reader holding one
/// snapshot never sees a mix of old and new.
#[derive(Default)]
pub struct Models {
    pub sentiment: Option<Arc<SentimentClassifier>>,
    pub disambiguator: Option<Arc<Disambiguator>>,
    pub sentiment_loaded: Option<DateTime<Utc>>,
    pub disambig_loaded: Option<DateTime<Utc>>,
}

pub struct AppState {
    pub store: Arc<DocumentStore>,
    pub kb: KnowledgeBase,
    pub trie: SurfaceTrie,
    pub resources: Arc<Resources>,
    pub presets: PresetTable,
    pub policy: LanguagePolicy,
    pub model_dir: Option<PathBuf>,
    pub token: Option<String>,
    pub retrain_timeout: Duration,
    pub holdout: f64,
    pub sentiment_train: SentimentTrainConfig,
    pub disambig_train: TrainConfig,
    pub disambig_vocab: VocabularyConfig,
    pub started: DateTime<Utc>,
    models: RwLock<Arc<Models>>,
    /// Held for the whole of a retrain.
    pub(crate) retrain_lock: tokio::sync::Mutex<()>,
    pub(crate) served: Mutex<Served>,
}

/// Annotation queue bookkeeping: when each item was last handed out.
#[derive(Default)]
pub(crate) struct Served {
    pub(crate) clock: u64,
    pub(crate) last: HashMap<(String, Option<String>, popmine::model::Task), u64>,
}

pub type SharedState = Arc<AppState>;

impl AppState {
    pub fn new(config: ServiceConfig) -> popmine::Result<SharedState> {
        config.presets.validate()?;
        if let Some(m) = &config.sentiment {
            m.check_resources(&config.resources)?;
        }
        let trie = SurfaceTrie::build(&config.kb, MatchOptions::default())?;
        let now = Utc::now();
        let models = Models {
            sentiment_loaded: config.sentiment.as_ref().map(|_| now),
            disambig_loaded: config.disambiguator.as_ref().map(|_| now),
            sentiment: config.sentiment.map(Arc::new),
            disambiguator: config.disambiguator.map(Arc::new),
        };
        Ok(Arc::new(AppState {
            store: config.store,
            kb: config.kb,
            trie,
            resources: Arc::new(config.resources),
            presets: config.presets,
            policy: config.policy,
            model_dir: config.model_dir,
            token: config.token,
            retrain_timeout: config.retrain_timeout,
            holdout: config.holdout,
            sentiment_train: config.sentiment_train,
            disambig_train: config.disambig_train,
            disambig_vocab: config.disambig_vocab,
            started: now,
            models: RwLock::new(Arc::new(models)),
            retrain_lock: tokio::sync::Mutex::new(()),
            served: Mutex::new(Served::default()),
        }))
    }

    pub fn models(&self) -> Arc<Models> {
        self.models.read().expect("models lock poisoned").clone()
    }

    pub fn swap_sentiment(&self, model: SentimentClassifier) {
        let mut guard = self.models.write().expect("models lock poisoned");
        let old = &**guard;
        *guard = Arc::new(Models {
            sentiment: Some(Arc::new(model)),
            sentiment_loaded: Some(Utc::now()),
            disambiguator: old.disambiguator.clone(),
            disambig_loaded: old.disambig_loaded,
        });
    }

    pub fn swap_disambiguator(&self, model: Disambiguator) {
        let mut guard = self.models.write().expect("models lock poisoned");
        let old = &**guard;
        *guard = Arc::new(Models {
            sentiment: old.sentiment.clone(),
            sentiment_loaded: old.sentiment_loaded,
            disambiguator: Some(Arc::new(model)),
            disambig_loaded: Some(Utc::now()),
        });
    }

    /// Runs extraction and the classifiers of one model snapshot over `docs`.
    pub fn process(&self, docs: &[popmine::model::Document]) -> popmine::Result<popmine::pipeline::PipelineReport> {
        let models = self.models();
        let config = PipelineConfig {
            kb: &self.kb,
            trie: &self.trie,
            policy: &self.policy,
            disambiguator: models.disambiguator.as_deref(),
            sentiment: models.sentiment.as_deref().map(|m| (m, &*self.resources)),
            smoothing: popmine::indicators::Smoothing::None,
            presets: &self.presets,
        };
        popmine::pipeline::process_documents(&self.store, &config, docs)
    }
}
