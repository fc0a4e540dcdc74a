use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use proptest::prelude::*;

use popmine::indicators::{
    buzz_share, daily_counts, kalman_smooth, log_sentiment, negatives_share, DailyCounts, EntityCounts,
    LocalLevelFilter,
};
use popmine::kb::{Entity, KnowledgeBase};
use popmine::model::{Document, Medium, Mention, Sentiment, Source, Span};
use popmine::store::DocumentStore;

fn row_strategy() -> impl Strategy<Value = DailyCounts> {
    proptest::collection::vec((0u64..50, 0u64..50), 1..12).prop_map(|pairs| DailyCounts {
        date: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(),
        medium: Medium::Twitter,
        entities: pairs
            .into_iter()
            .enumerate()
            .map(|(i, (m, n))| EntityCounts { entity_id: format!("e{i}"), mentions: m, negatives: n, ..Default::default() })
            .collect(),
    })
}

fn sums_to_one(shares: &[Option<f64>], denominator: u64) -> bool {
    if denominator == 0 {
        shares.iter().all(Option::is_none)
    } else {
        (shares.iter().map(|s| s.unwrap()).sum::<f64>() - 1.0).abs() <= 1e-9
    }
}

proptest! {
    #[test]
    fn shares_sum_to_one(row in row_strategy()) {
        let m: u64 = row.entities.iter().map(|e| e.mentions).sum();
        let n: u64 = row.entities.iter().map(|e| e.negatives).sum();
        prop_assert!(sums_to_one(&buzz_share(&row), m));
        prop_assert!(sums_to_one(&negatives_share(&row), n));
    }

    #[test]
    fn log_sentiment_antisymmetric(p in 0u64..1_000_000, n in 0u64..1_000_000) {
        prop_assert_eq!(log_sentiment(p, n), -log_sentiment(n, p));
        prop_assert_eq!(log_sentiment(p, n) > 0.0, p > n);
    }

    #[test]
    fn gain_positive_below_one_and_converging(q in 0.001f64..100.0) {
        let mut f = LocalLevelFilter::new(q);
        f.step(0.0);
        let mut gains = Vec::new();
        for _ in 0..300 {
            f.step(0.0);
            gains.push(f.gain());
        }
        prop_assert!(gains.iter().all(|&k| k > 0.0 && k < 1.0));
        // steady state of K = (P+q)/(P+q+1), P = (1-K)(P+q)
        let k_star = (-q + (q * q + 4.0 * q).sqrt()) / 2.0;
        prop_assert!((gains.last().unwrap() - k_star).abs() < 1e-6, "{} vs {}", gains.last().unwrap(), k_star);
    }

    #[test]
    fn constant_series_is_fixed(c in -1e3f64..1e3, q in 0.001f64..10.0, len in 1usize..60, holes in proptest::collection::vec(any::<bool>(), 60)) {
        let d0 = NaiveDate::from_ymd_opt(2014, 1, 1).unwrap();
        let series: Vec<(NaiveDate, Option<f64>)> = (0..len)
            .map(|i| (d0 + Duration::days(i as i64 * 2), (!holes[i] || i == 0).then_some(c)))
            .collect();
        for v in kalman_smooth(&series, q).unwrap() {
            prop_assert!((v.unwrap() - c).abs() <= 1e-9 * c.abs().max(1.0));
        }
    }
}

fn kb(n: usize) -> KnowledgeBase {
    let entities = (0..n)
        .map(|i| Entity {
            id: format!("e{i}"),
            canonical_name: format!("Nome{i}"),
            surface_forms: vec![format!("Nome{i}")],
            profession: None,
            party: None,
            profile: None,
        })
        .collect();
    KnowledgeBase::new(entities).unwrap()
}

#[derive(Debug, Clone)]
struct RawMention {
    doc: usize,
    entity: usize,
    at: usize,
    related: Option<bool>,
    sentiment: Option<Sentiment>,
}

fn store_strategy() -> impl Strategy<Value = (Vec<(Source, i64)>, Vec<RawMention>)> {
    let source = proptest::sample::select(Source::ALL.to_vec());
    let docs = proptest::collection::vec((source, 0i64..10 * 24), 1..40);
    docs.prop_flat_map(|docs| {
        let n = docs.len();
        let sentiment = proptest::option::of(proptest::sample::select(Sentiment::ALL.to_vec()));
        let m = (0..n, 0usize..4, 0usize..6, proptest::option::of(any::<bool>()), sentiment)
            .prop_map(|(doc, entity, at, related, sentiment)| RawMention { doc, entity, at, related, sentiment });
        (Just(docs), proptest::collection::vec(m, 0..80))
    })
}

/// Recount straight from the documents and the mention log, keyed by
/// (date, medium, entity).
fn recount(
    docs: &[Document],
    log: &[Mention],
    from: NaiveDate,
    to: NaiveDate,
) -> BTreeMap<(NaiveDate, Medium, String), [u64; 4]> {
    // later records with the same key replace earlier ones
    let mut latest: BTreeMap<(String, String, usize), &Mention> = BTreeMap::new();
    for m in log {
        latest.insert((m.doc_id.clone(), m.entity_id.clone(), m.span.token_start), m);
    }
    let mut out = BTreeMap::new();
    for d in docs.iter().filter(|d| d.date() >= from && d.date() <= to) {
        let medium = Medium::from(d.source);
        for e in 0..4 {
            out.entry((d.date(), medium, format!("e{e}"))).or_insert([0; 4]);
        }
        let entities: BTreeSet<&str> = latest
            .values()
            .filter(|m| m.doc_id == d.id && m.is_related())
            .map(|m| m.entity_id.as_str())
            .collect();
        for e in entities {
            let slot = out.get_mut(&(d.date(), medium, e.to_string())).unwrap();
            slot[0] += 1;
            if d.source != Source::Twitter {
                continue;
            }
            let first_labelled = latest
                .values()
                .filter(|m| m.doc_id == d.id && m.entity_id == e && m.is_related() && m.sentiment.is_some())
                .min_by_key(|m| m.span.token_start);
            match first_labelled.and_then(|m| m.sentiment) {
                Some(Sentiment::Positive) => slot[1] += 1,
                Some(Sentiment::Negative) => slot[2] += 1,
                Some(Sentiment::Neutral) => slot[3] += 1,
                None => {}
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn daily_counts_match_recount((docs, raw) in store_strategy(), lo in 0u64..5, span in 0u64..8) {
        let kb = kb(4);
        let store = DocumentStore::in_memory();
        let t0 = Utc.with_ymd_and_hms(2014, 3, 1, 0, 0, 0).unwrap();
        let docs: Vec<Document> = docs
            .iter()
            .enumerate()
            .map(|(i, &(s, h))| Document::new(format!("d{i}"), s, t0 + Duration::hours(h), "x"))
            .collect();
        for d in &docs {
            store.put_document(d.clone()).unwrap();
        }
        let log: Vec<Mention> = raw
            .iter()
            .map(|r| Mention {
                doc_id: format!("d{}", r.doc),
                entity_id: format!("e{}", r.entity),
                span: Span { token_start: r.at, token_end: r.at + 1, byte_start: 0, byte_end: 1 },
                surface: "x".into(),
                related: r.related,
                sentiment: r.sentiment,
            })
            .collect();
        for chunk in log.chunks(7) {
            store.put_mentions(chunk).unwrap();
        }
        let from = t0.date_naive() + Duration::days(lo as i64);
        let to = from + Duration::days(span as i64);
        let rows = daily_counts(&store, &kb, from, to).unwrap();
        let mut flat = BTreeMap::new();
        for r in &rows {
            for e in &r.entities {
                flat.insert((r.date, r.medium, e.entity_id.clone()), [e.mentions, e.positives, e.negatives, e.neutrals]);
                prop_assert!(e.positives + e.negatives + e.neutrals <= e.mentions);
            }
        }
        prop_assert_eq!(flat, recount(&docs, &log, from, to));
        prop_assert!(rows.windows(2).all(|w| (w[0].date, w[0].medium) < (w[1].date, w[1].medium)));
    }
}
