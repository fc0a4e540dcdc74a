use std::collections::{BTreeSet, HashSet};

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use popmine::indicators::{build_series, daily_counts, IndicatorSeries, Metric, Smoothing};
use popmine::kb::Entity;
use popmine::model::{timestamp, Annotation, Document, Medium, Mention, Source, Task};
use popmine::store::PutOutcome;
use popmine::training;

use crate::error::{ApiError, ApiResult, Data};
use crate::query::Params;
use crate::state::{AppState, SharedState, DISAMBIG_MODEL_FILE, SENTIMENT_MODEL_FILE};

pub async fn health(State(state): State<SharedState>) -> Data<Value> {
    let models = state.models();
    let model = |loaded: Option<DateTime<Utc>>, meta: Option<&popmine::linear::TrainingMetadata>| match (loaded, meta) {
        (Some(at), Some(m)) => json!({ "loaded_at": timestamp::format(&at), "examples": m.examples }),
        _ => Value::Null,
    };
    Data(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "started_at": timestamp::format(&state.started),
        "documents": state.store.len(),
        "models": {
            "sentiment": model(models.sentiment_loaded, models.sentiment.as_ref().map(|m| &m.metadata)),
            "disambig": model(models.disambig_loaded, models.disambiguator.as_ref().map(|m| &m.metadata)),
        },
    }))
}

pub async fn entities(State(state): State<SharedState>) -> Data<Vec<Entity>> {
    Data(state.kb.entities().to_vec())
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this endpoint")
}

#[derive(Debug, Serialize)]
pub struct IngestReport {
    pub received: usize,
    pub stored: usize,
    pub duplicates: usize,
    /// Ids already stored with different content; these were not changed.
    pub conflicts: Vec<String>,
    pub mentions: usize,
}

/// Accepts one document or an array. Nothing is stored if any item is
/// malformed.
pub async fn post_documents(State(state): State<SharedState>, body: Bytes) -> ApiResult<(StatusCode, Data<IngestReport>)> {
    let value: Value = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("invalid_json", e.to_string()))?;
    let items = match value {
        Value::Array(items) => items,
        other => vec![other],
    };
    let mut docs = Vec::with_capacity(items.len());
    for (i, v) in items.into_iter().enumerate() {
        let doc = serde_json::from_value::<Document>(v)
            .map_err(popmine::Error::from)
            .and_then(|d| d.validate().map(|_| d))
            .map_err(|e| ApiError::bad_request("invalid_document", e.to_string()).with_details(json!({ "index": i })))?;
        docs.push(doc);
    }
    let report = tokio::task::spawn_blocking(move || ingest(&state, docs))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok((StatusCode::CREATED, Data(report)))
}

pub(crate) fn ingest(state: &AppState, docs: Vec<Document>) -> ApiResult<IngestReport> {
    let mut report = IngestReport { received: docs.len(), stored: 0, duplicates: 0, conflicts: Vec::new(), mentions: 0 };
    let mut inserted = Vec::new();
    for mut doc in docs {
        state.policy.tag(&mut doc);
        match state.store.put_document(doc.clone()) {
            Ok(PutOutcome::Inserted) => inserted.push(doc),
            Ok(PutOutcome::Unchanged) => report.duplicates += 1,
            Err(popmine::Error::Conflict(id)) => report.conflicts.push(id),
            Err(e) => return Err(e.into()),
        }
    }
    report.stored = inserted.len();
    report.mentions = state.process(&inserted)?.extract.mentions;
    Ok(report)
}

/// From/to default to the first and last stored day. `None` when the store
/// is empty and no bound was given.
fn date_range(state: &AppState, p: &Params) -> ApiResult<Option<(NaiveDate, NaiveDate)>> {
    let (from, to) = (p.date("from")?, p.date("to")?);
    let stored = state.store.date_range();
    let (from, to) = match (from, to, stored) {
        (Some(f), Some(t), _) => (f, t),
        (f, t, Some((lo, hi))) => (f.unwrap_or(lo), t.unwrap_or(hi)),
        (Some(f), None, None) => (f, f),
        (None, Some(t), None) => (t, t),
        (None, None, None) => return Ok(None),
    };
    if from > to {
        return Err(ApiError::bad_request("invalid_parameter", format!("from {from} is after to {to}")));
    }
    Ok(Some((from, to)))
}

fn series(state: &AppState, p: &Params, medium: Medium, metric: Metric, smoothing: Smoothing) -> ApiResult<Vec<IndicatorSeries>> {
    let wanted = p.list("entity");
    if let Some(unknown) = wanted.iter().find(|e| state.kb.get(e).is_none()) {
        return Err(ApiError::bad_request("unknown_entity", format!("unknown entity `{unknown}`")));
    }
    let Some((from, to)) = date_range(state, p)? else {
        return Ok(Vec::new());
    };
    let rows = daily_counts(&state.store, &state.kb, from, to)?;
    state
        .kb
        .entities()
        .iter()
        .filter(|e| wanted.is_empty() || wanted.contains(&e.id))
        .map(|e| Ok(build_series(&rows, &state.kb, &e.id, medium, metric, smoothing, &state.presets)?))
        .collect()
}

pub async fn buzz(State(state): State<SharedState>, RawQuery(q): RawQuery) -> ApiResult<Data<Vec<IndicatorSeries>>> {
    let p = Params::parse(q.as_deref());
    let medium: Medium = p.parsed("medium", Medium::Twitter)?;
    let metric = match p.get("mode").unwrap_or("share") {
        "share" => Metric::BuzzShare,
        "count" => Metric::BuzzCount,
        other => return Err(ApiError::bad_request("invalid_parameter", format!("mode: expected share or count, got `{other}`"))),
    };
    let smoothing: Smoothing = p.parsed("smoothing", Smoothing::Default)?;
    Ok(Data(series(&state, &p, medium, metric, smoothing)?))
}

/// Sentiment is only classified on tweets, so there is no medium choice.
pub async fn sentiment(State(state): State<SharedState>, RawQuery(q): RawQuery) -> ApiResult<Data<Vec<IndicatorSeries>>> {
    let p = Params::parse(q.as_deref());
    if p.parsed("medium", Medium::Twitter)? != Medium::Twitter {
        return Err(ApiError::bad_request("invalid_parameter", "sentiment indicators exist for twitter only"));
    }
    let metric: Metric = p.parsed("metric", Metric::LogRatio)?;
    if !metric.is_sentiment() {
        return Err(ApiError::bad_request("invalid_parameter", "metric: expected log_ratio or negatives_share"));
    }
    let smoothing: Smoothing = p.parsed("smoothing", Smoothing::None)?;
    Ok(Data(series(&state, &p, Medium::Twitter, metric, smoothing)?))
}

fn task_param(p: &Params) -> ApiResult<Task> {
    let raw = p
        .get("task")
        .ok_or_else(|| ApiError::bad_request("invalid_parameter", "task is required"))?;
    raw.parse().map_err(|_| ApiError::bad_request("unknown_task", format!("unknown task `{raw}`")))
}

#[derive(Debug, Serialize)]
pub struct QueueItem {
    pub task: Task,
    pub document: Document,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity_id: Option<String>,
    /// Mentions to highlight, with byte offsets into the document text.
    pub mentions: Vec<Mention>,
}

/// Items no annotator has labelled yet for the task, in queue order: tweets
/// by (timestamp, id), and for disambiguation each mentioned entity in id
/// order.
fn candidates(state: &AppState, task: Task) -> Vec<(Document, Option<String>)> {
    let labelled: HashSet<(String, Option<String>)> = state
        .store
        .annotations()
        .into_iter()
        .filter(|a| a.task == task)
        .map(|a| (a.doc_id, if task == Task::Disambig { a.entity_id } else { None }))
        .collect();
    let mut tweets: Vec<Document> = state.store.documents().into_iter().filter(|d| d.source == Source::Twitter).collect();
    tweets.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    let mut out = Vec::new();
    for doc in tweets {
        let entities: Vec<Option<String>> = match task {
            Task::Sentiment => vec![None],
            Task::Disambig => state
                .store
                .mentions_for(&doc.id)
                .into_iter()
                .map(|m| m.entity_id)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .map(Some)
                .collect(),
        };
        for e in entities {
            if !labelled.contains(&(doc.id.clone(), e.clone())) {
                out.push((doc.clone(), e));
            }
        }
    }
    out
}

/// Hands out the unlabelled item served least recently; never-served items
/// come first. 204 once everything is labelled.
pub async fn annotation_next(State(state): State<SharedState>, RawQuery(q): RawQuery) -> ApiResult<Response> {
    let task = task_param(&Params::parse(q.as_deref()))?;
    let items = candidates(&state, task);
    let chosen = {
        let mut served = state.served.lock().expect("queue lock poisoned");
        let pick = items
            .into_iter()
            .enumerate()
            .min_by_key(|(i, (doc, e))| (served.last.get(&(doc.id.clone(), e.clone(), task)).copied(), *i))
            .map(|(_, item)| item);
        if let Some((doc, e)) = &pick {
            served.clock += 1;
            let now = served.clock;
            served.last.insert((doc.id.clone(), e.clone(), task), now);
        }
        pick
    };
    let Some((document, entity_id)) = chosen else {
        return Ok(StatusCode::NO_CONTENT.into_response());
    };
    let mentions = state
        .store
        .mentions_for(&document.id)
        .into_iter()
        .filter(|m| entity_id.as_ref().is_none_or(|e| &m.entity_id == e))
        .collect();
    Ok(Data(QueueItem { task, document, entity_id, mentions }).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationRequest {
    doc_id: String,
    #[serde(default)]
    entity_id: Option<String>,
    task: String,
    label: String,
    annotator: String,
    /// RFC 3339; the server clock when absent.
    #[serde(default)]
    timestamp: Option<String>,
}

pub async fn annotation_submit(State(state): State<SharedState>, body: Bytes) -> ApiResult<(StatusCode, Data<Annotation>)> {
    let req: AnnotationRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("invalid_json", e.to_string()))?;
    let task: Task = req
        .task
        .parse()
        .map_err(|_| ApiError::bad_request("unknown_task", format!("unknown task `{}`", req.task)))?;
    let timestamp = match &req.timestamp {
        Some(t) => timestamp::parse(t).map_err(|e| ApiError::bad_request("invalid_annotation", e.to_string()))?,
        None => timestamp::truncate(Utc::now()),
    };
    let annotation = Annotation {
        doc_id: req.doc_id,
        entity_id: req.entity_id,
        task,
        label: req.label,
        annotator: req.annotator,
        timestamp,
    };
    annotation
        .validate()
        .map_err(|e| ApiError::bad_request("invalid_annotation", e.to_string()))?;
    if !state.store.contains(&annotation.doc_id) {
        return Err(ApiError::bad_request("unknown_document", format!("document `{}` is not stored", annotation.doc_id)));
    }
    if let Some(e) = annotation.entity_id.as_deref().filter(|e| state.kb.get(e).is_none()) {
        return Err(ApiError::bad_request("unknown_entity", format!("unknown entity `{e}`")));
    }
    match state.store.put_annotation(annotation.clone()) {
        Ok(()) => Ok((StatusCode::CREATED, Data(annotation))),
        Err(e @ popmine::Error::DuplicateAnnotation(_)) => {
            Err(ApiError::new(StatusCode::CONFLICT, "duplicate_annotation", e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Serialize)]
pub struct RetrainReport {
    pub task: Task,
    pub examples: usize,
    pub class_counts: std::collections::BTreeMap<String, usize>,
    pub model: popmine::linear::TrainingMetadata,
    /// Scores on the held-out part of the split; null when it is empty.
    pub metrics: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_file: Option<String>,
}

async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    F: FnOnce() -> popmine::Result<T> + Send + 'static,
    T: Send + 'static,
{
    match tokio::time::timeout(state.retrain_timeout, tokio::task::spawn_blocking(f)).await {
        Err(_) => Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "retrain_timeout",
            format!("training did not finish within {:?}", state.retrain_timeout),
        )),
        Ok(Err(join)) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", join.to_string())),
        Ok(Ok(result)) => result.map_err(|e| match e {
            popmine::Error::Training(m) => ApiError::new(StatusCode::CONFLICT, "training_failed", m),
            other => other.into(),
        }),
    }
}

fn save(state: &AppState, file: &str, json: &str) -> ApiResult<Option<String>> {
    let Some(dir) = &state.model_dir else {
        return Ok(None);
    };
    let path = dir.join(file);
    popmine::io::write_atomic(&path, json.as_bytes())?;
    Ok(Some(path.display().to_string()))
}

fn insufficient(task: Task, counts: &std::collections::BTreeMap<String, usize>) -> ApiResult<()> {
    if counts.values().all(|&c| c > 0) {
        return Ok(());
    }
    Err(ApiError::new(
        StatusCode::CONFLICT,
        "insufficient_classes",
        format!("every {task} label needs at least one annotation"),
    )
    .with_details(json!({ "class_counts": counts })))
}

/// Trains on the annotation log, writes the model and swaps it in.
/// Retrains run one at a time.
pub async fn retrain(State(state): State<SharedState>, Path(task): Path<String>) -> ApiResult<Data<RetrainReport>> {
    let task: Task = task
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "unknown_task", format!("unknown task `{task}`")))?;
    let _exclusive = state.retrain_lock.lock().await;
    match task {
        Task::Sentiment => {
            let examples = training::sentiment_examples(&state.store)?;
            let counts = training::class_counts(task, examples.iter().map(|e| e.label.to_string()));
            insufficient(task, &counts)?;
            let n = examples.len();
            let st = state.clone();
            let (model, metrics) = blocking(&state, move || {
                training::train_sentiment_holdout(&examples, &st.resources, &st.sentiment_train, st.holdout)
            })
            .await?;
            let model_file = save(&state, SENTIMENT_MODEL_FILE, &model.to_json()?)?;
            let report = RetrainReport {
                task,
                examples: n,
                class_counts: counts,
                model: model.metadata.clone(),
                metrics: serde_json::to_value(metrics).unwrap_or(Value::Null),
                model_file,
            };
            state.swap_sentiment(model);
            Ok(Data(report))
        }
        Task::Disambig => {
            let examples = training::disambig_examples(&state.store)?;
            let counts = training::class_counts(
                task,
                examples.iter().map(|e| if e.related { "related" } else { "unrelated" }.to_string()),
            );
            insufficient(task, &counts)?;
            let n = examples.len();
            let st = state.clone();
            let (model, metrics) = blocking(&state, move || {
                training::train_disambig_holdout(&st.kb, &examples, st.disambig_vocab, &st.disambig_train, st.holdout)
            })
            .await?;
            let model_file = save(&state, DISAMBIG_MODEL_FILE, &model.to_json()?)?;
            let report = RetrainReport {
                task,
                examples: n,
                class_counts: counts,
                model: model.metadata.clone(),
                metrics: serde_json::to_value(metrics).unwrap_or(Value::Null),
                model_file,
            };
            state.swap_disambiguator(model);
            Ok(Data(report))
        }
    }
}
