use std::collections::HashMap;
use std::sync::LazyLock;

use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use popmine::disambig::{featurize_terms, terms, DisambigExample, DisambigModel, VocabularyConfig};
use popmine::kb::KnowledgeBase;
use popmine::linear::TrainConfig;
use popmine::model::Sentiment;
use popmine::sentiment::{
    featurize_sentiment, normalize, ClusterMap, EmbeddingTable, SentimentExample, SentimentLexicon,
    SentimentModel, SentimentResources, SentimentTrainConfig,
};

fn resources() -> SentimentResources<f64> {
    let mut vectors = HashMap::new();
    vectors.insert("bom".to_string(), vec![1.0, 0.2]);
    vectors.insert("mau".to_string(), vec![-1.0, 0.1]);
    vectors.insert("hoje".to_string(), vec![0.0, 1.0]);
    SentimentResources {
        clusters: ClusterMap::parse("0110\tbom\n0110\tótimo\n1011\tmau\n1011\tpéssimo\n").unwrap(),
        embeddings: EmbeddingTable::from_vectors(2, vectors).unwrap(),
        lexicon: SentimentLexicon::parse("bom\t1\nótimo\t1\nmau\t-1\npéssimo\t-1\n").unwrap(),
    }
}

fn corpus(n: usize, seed: u64) -> Vec<SentimentExample> {
    let pos = ["bom", "ótimo", "excelente", "gosto"];
    let neg = ["mau", "péssimo", "horrível", "odeio"];
    let neu = ["reunião", "amanhã", "anunciou", "parlamento"];
    let filler = ["o", "a", "hoje", "governo", "ministro", "disse", "@ana", "http://x.pt"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = Sentiment::ALL[i % 3];
            let cue: &[&str] = match label {
                Sentiment::Positive => &pos,
                Sentiment::Negative => &neg,
                Sentiment::Neutral => &neu,
            };
            let mut words: Vec<&str> = (0..rng.random_range(2..6)).map(|_| *filler.choose(&mut rng).unwrap()).collect();
            words.push(cue.choose(&mut rng).unwrap());
            words.shuffle(&mut rng);
            SentimentExample { text: words.join(" "), label }
        })
        .collect()
}

fn labeled(examples: &[SentimentExample]) -> Vec<(Vec<String>, Sentiment)> {
    examples.iter().map(|e| (normalize(&e.text), e.label)).collect()
}

#[test]
fn sentiment_learns_cue_words() {
    let train = corpus(150, 1);
    let test = corpus(60, 2);
    let cfg = SentimentTrainConfig::default();
    let model = SentimentModel::train_from_examples(&train, &resources(), &cfg).unwrap();
    let eval = model.evaluate(&labeled(&test), &resources()).unwrap();
    assert!(eval.accuracy >= 0.95, "{eval:?}");
    let counted: usize = eval.confusion.iter().flatten().sum();
    assert_eq!(counted, test.len());
}

#[test]
fn sentiment_model_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let train = corpus(90, 3);
    let cfg = SentimentTrainConfig::default();
    let a = SentimentModel::train_from_examples(&train, &resources(), &cfg).unwrap();
    let b = SentimentModel::train_from_examples(&train, &resources(), &cfg).unwrap();
    a.save(dir.path().join("a.json")).unwrap();
    b.save(dir.path().join("b.json")).unwrap();
    let raw_a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(raw_a, std::fs::read(dir.path().join("b.json")).unwrap());
    let loaded = SentimentModel::<f64>::load(dir.path().join("a.json")).unwrap();
    assert_eq!(loaded, a);
}

#[test]
fn sentiment_load_rejects_tampered_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = SentimentModel::train_from_examples(&corpus(60, 4), &resources(), &SentimentTrainConfig::default()).unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let mut json: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    json["weights"][0].as_array_mut().unwrap().pop();
    std::fs::write(&path, json.to_string()).unwrap();
    assert!(SentimentModel::<f64>::load(&path).is_err());
}

#[test]
fn resources_with_wrong_embedding_dim_are_refused() {
    let model = SentimentModel::train_from_examples(&corpus(60, 5), &resources(), &SentimentTrainConfig::default()).unwrap();
    let other = SentimentResources::<f64> { embeddings: EmbeddingTable::empty(3), ..resources() };
    assert!(model.check_resources(&other).is_err());
}

static SMALL_SENTIMENT: LazyLock<SentimentModel<f64>> = LazyLock::new(|| {
    SentimentModel::train_from_examples(&corpus(30, 6), &resources(), &SentimentTrainConfig::default()).unwrap()
});

static SMALL_DISAMBIG: LazyLock<DisambigModel<f64>> = LazyLock::new(|| disambig_model(&kb(), 40, 0.0, 7));

proptest! {

    #[test]
    fn feature_length_is_fixed_per_model(text in "[a-zçãéó @:)!#]{0,60}") {
        let model = &*SMALL_SENTIMENT;
        let x = featurize_sentiment(&normalize(&text), &model.features, &resources());
        prop_assert_eq!(x.dim(), model.features.dim());
        let p = model.predict(&normalize(&text), &resources()).probabilities;
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn disambig_features_are_pure(text in "[a-z ]{0,60}") {
        let kb = kb();
        let e = &kb.entities()[0];
        let model = &*SMALL_DISAMBIG;
        let t = terms(&text);
        let a = featurize_terms::<f64, _>(&t, "Costa", e, &model.vocabulary);
        let b = featurize_terms::<f64, _>(&t, "Costa", e, &model.vocabulary);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.dim(), model.feature_dim());
    }
}

fn kb() -> KnowledgeBase {
    KnowledgeBase::parse(
        r#"{"id":"costa","canonical":"António Costa","surface_forms":["António Costa","Costa"],"profile":"primeiro ministro partido socialista governo lisboa"}"#,
    )
    .unwrap()
}

/// Tweets saying "Costa" in a political context (related) or about the
/// coast and beaches (unrelated); `noise` of the labels are flipped.
fn disambig_examples(n: usize, noise: f64, seed: u64) -> Vec<DisambigExample> {
    let politics = ["governo", "ministro", "partido", "orçamento", "socialista", "parlamento"];
    let beach = ["praia", "mar", "areia", "verão", "surf", "sol"];
    let filler = ["hoje", "na", "a", "o", "muito", "ontem"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let related = i % 2 == 0;
            let topic: &[&str] = if related { &politics } else { &beach };
            let mut words = vec!["Costa"];
            for _ in 0..rng.random_range(2..5) {
                words.push(topic.choose(&mut rng).unwrap());
            }
            for _ in 0..rng.random_range(0..3) {
                words.push(filler.choose(&mut rng).unwrap());
            }
            words.shuffle(&mut rng);
            let flipped = rng.random_bool(noise);
            DisambigExample {
                text: words.join(" "),
                entity_id: "costa".into(),
                surface: Some("Costa".into()),
                related: related != flipped,
            }
        })
        .collect()
}

fn disambig_model(kb: &KnowledgeBase, n: usize, noise: f64, seed: u64) -> DisambigModel<f64> {
    DisambigModel::train_from_examples(kb, &disambig_examples(n, noise, seed), VocabularyConfig::default(), &TrainConfig::default())
        .unwrap()
}

#[test]
fn disambig_tolerates_label_noise() {
    let kb = kb();
    let model = disambig_model(&kb, 300, 0.05, 8);
    let test = disambig_examples(200, 0.0, 9);
    let e = &kb.entities()[0];
    let correct = test
        .iter()
        .filter(|ex| {
            let x = featurize_terms(&terms(&ex.text), "Costa", e, &model.vocabulary);
            model.classify_related(&x).unwrap().0 == ex.related
        })
        .count();
    assert!(correct as f64 / test.len() as f64 >= 0.9, "{correct}/200");
}
