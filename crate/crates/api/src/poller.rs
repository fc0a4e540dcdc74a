//! Periodic feed fetching. Each tick fetches every feed concurrently, then
//! parses and stores the items one feed at a time.

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Serialize;
use tokio::sync::watch;
use tokio::task::JoinSet;

use popmine::ingest::{link_id, parse_feed, store_feed_items, FeedSpec};

use crate::state::{AppState, SharedState};

pub const DEFAULT_INTERVAL: Duration = Duration::from_secs(15 * 60);

pub trait Fetcher: Send + Sync + 'static {
    fn fetch(&self, url: &str) -> impl Future<Output = Result<Vec<u8>, String>> + Send;
}

pub struct HttpFetcher {
    client: reqwest::Client,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> reqwest::Result<Self> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("popmine/", env!("CARGO_PKG_VERSION")))
            .build()?;
        Ok(HttpFetcher { client })
    }
}

impl Fetcher for HttpFetcher {
    async fn fetch(&self, url: &str) -> Result<Vec<u8>, String> {
        let resp = self.client.get(url).send().await.map_err(|e| e.to_string())?;
        let resp = resp.error_for_status().map_err(|e| e.to_string())?;
        resp.bytes().await.map(|b| b.to_vec()).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeedOutcome {
    pub url: String,
    pub stored: usize,
    pub duplicates: usize,
    pub error: Option<String>,
}

fn store_feed(state: &AppState, feed: &FeedSpec, body: &[u8], now: DateTime<Utc>) -> popmine::Result<FeedOutcome> {
    let items = parse_feed(body)?;
    let fresh: Vec<String> = items
        .iter()
        .map(|i| link_id(&i.link))
        .filter(|id| !state.store.contains(id))
        .collect();
    let report = store_feed_items(&state.store, &items, feed.source, now, &state.policy)?;
    let docs: Vec<_> = fresh.iter().filter_map(|id| state.store.get(id)).collect();
    state.process(&docs)?;
    Ok(FeedOutcome { url: feed.url.clone(), stored: report.stored, duplicates: report.duplicates, error: None })
}

/// One round over all feeds. A failing feed does not stop the others.
pub async fn poll_once<F: Fetcher>(state: &SharedState, feeds: &[FeedSpec], fetcher: &Arc<F>, now: DateTime<Utc>) -> Vec<FeedOutcome> {
    let mut fetches = JoinSet::new();
    for (i, feed) in feeds.iter().enumerate() {
        let fetcher = fetcher.clone();
        let url = feed.url.clone();
        fetches.spawn(async move { (i, fetcher.fetch(&url).await) });
    }
    let mut bodies = vec![None; feeds.len()];
    while let Some(joined) = fetches.join_next().await {
        if let Ok((i, body)) = joined {
            bodies[i] = Some(body);
        }
    }
    let mut out = Vec::with_capacity(feeds.len());
    for (feed, body) in feeds.iter().zip(bodies) {
        let failed = |error: String| FeedOutcome { url: feed.url.clone(), stored: 0, duplicates: 0, error: Some(error) };
        let outcome = match body {
            None => failed("fetch task panicked".into()),
            Some(Err(e)) => failed(e),
            Some(Ok(bytes)) => store_feed(state, feed, &bytes, now).unwrap_or_else(|e| failed(e.to_string())),
        };
        match &outcome.error {
            Some(e) => tracing::warn!(url = %feed.url, "feed failed: {e}"),
            None => tracing::info!(url = %feed.url, stored = outcome.stored, "feed polled"),
        }
        out.push(outcome);
    }
    out
}

/// Polls every `interval` until `shutdown` turns true. The first round runs
/// immediately.
pub async fn run<F: Fetcher>(
    state: SharedState,
    feeds: Vec<FeedSpec>,
    fetcher: Arc<F>,
    interval: Duration,
    mut shutdown: watch::Receiver<bool>,
) {
    let mut ticker = tokio::time::interval(interval);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            _ = ticker.tick() => {
                poll_once(&state, &feeds, &fetcher, Utc::now()).await;
            }
            changed = shutdown.changed() => {
                if changed.is_err() || *shutdown.borrow() {
                    return;
                }
            }
        }
    }
}
