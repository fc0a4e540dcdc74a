use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/e2e").join(name)
}

fn popmine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popmine")).current_dir(fixture("")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const RESOURCES: [&str; 6] = ["--clusters", "clusters.tsv", "--embeddings", "embeddings.txt", "--lexicon", "lexicon.tsv"];
const RANGE: [&str; 4] = ["--from", "2014-03-10", "--to", "2014-03-14"];

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&popmine(&["--help"])), 0);
    assert_eq!(code(&popmine(&["pipeline", "--help"])), 0);
    let out = popmine(&["--version"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    assert_eq!(code(&popmine(&[])), 1);
    assert_eq!(code(&popmine(&["extract", "--store", s(&store), "--kb", "kb.jsonl", "--bogus"])), 1);
    assert_eq!(code(&popmine(&["aggregate", "--store", s(&store), "--kb", "kb.jsonl", "--from", "2014-03-12", "--to", "2014-03-10"])), 1);
    assert_eq!(code(&popmine(&["aggregate", "--store", s(&store), "--kb", "kb.jsonl", "--from", "12/03/2014"])), 1);
    assert_eq!(code(&popmine(&["aggregate", "--store", s(&store), "--kb", "kb.jsonl", "--smoothing", "heavy"])), 1);
    let out = popmine(&["train", "sentiment", "--examples", "sentiment_train.jsonl", "--holdout", "1.5", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&popmine(&["train", "sentiment", "--out", s(&dir.path().join("m.json"))])), 1);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let out = popmine(&["extract", "--store", s(&store), "--kb", "missing.jsonl"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\": \"x\"}\n").unwrap();
    // bad lines are reported and skipped, not fatal
    let out = popmine(&["ingest", "jsonl", s(&bad), "--store", s(&store)]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["errors"].as_array().unwrap().len(), 1);
    assert_eq!(code(&popmine(&["ingest", "jsonl", s(&dir.path().join("none.jsonl")), "--store", s(&store)])), 2);
    let out = popmine(&["sentiment", "--store", s(&store), "--model", "kb.jsonl"]);
    assert_eq!(code(&out), 2);
}

fn pipeline_args<'a>(store: &'a str, out: &'a str) -> Vec<&'a str> {
    let mut args = vec![
        "pipeline", "--store", store, "--kb", "kb.jsonl", "--input", "docs.jsonl",
        "--sentiment-model", "models/sentiment.json", "--disambig-model", "models/disambig.json", "--out", out,
    ];
    args.extend(RESOURCES);
    args.extend(RANGE);
    args
}

#[test]
fn pipeline_writes_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let run = popmine(&pipeline_args(s(&dir.path().join("store")), s(&out)));
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("indicators.json")).unwrap());
}

#[test]
fn stages_in_sequence_equal_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let st = s(&store);
    let steps: Vec<Vec<&str>> = vec![
        vec!["ingest", "jsonl", "docs.jsonl", "--store", st],
        vec!["extract", "--store", st, "--kb", "kb.jsonl"],
        vec!["disambiguate", "--store", st, "--kb", "kb.jsonl", "--model", "models/disambig.json"],
        [&["sentiment", "--store", st, "--model", "models/sentiment.json"][..], &RESOURCES[..]].concat(),
    ];
    for step in steps {
        let out = popmine(&step);
        assert_eq!(code(&out), 0, "{step:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = dir.path().join("agg.json");
    let agg = [&["aggregate", "--store", st, "--kb", "kb.jsonl", "--out", s(&out)][..], &RANGE[..]].concat();
    assert_eq!(code(&popmine(&agg)), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("indicators.json")).unwrap());

    // aggregate alone prints to stdout and defaults the range to the stored days
    let printed = popmine(&["aggregate", "--store", st, "--kb", "kb.jsonl"]);
    assert_eq!(printed.stdout, std::fs::read(fixture("indicators.json")).unwrap());
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("popmine.conf");
    std::fs::write(
        &conf,
        format!(
            "# shared settings\nstore = {}\nkb = kb.jsonl\nsentiment-model = models/sentiment.json\ndisambig-model = models/disambig.json\n\
             clusters = clusters.tsv\nembeddings = embeddings.txt\nlexicon = lexicon.tsv\nsmoothing = smooth\nport = 9999\n",
            s(&dir.path().join("store"))
        ),
    )
    .unwrap();
    let out = dir.path().join("out.json");
    let mut args = vec!["--config", s(&conf), "pipeline", "--input", "docs.jsonl", "--smoothing", "default", "--out", s(&out)];
    args.extend(RANGE);
    let run = popmine(&args);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("indicators.json")).unwrap());

    // without the override the file's smoothing applies
    let smooth = popmine(&["aggregate", "--config", s(&conf)]);
    assert_eq!(code(&smooth), 0);
    let series: serde_json::Value = serde_json::from_slice(&smooth.stdout).unwrap();
    assert_eq!(series[0]["smoothing"], "smooth");

    std::fs::write(&conf, "store\n").unwrap();
    assert_eq!(code(&popmine(&["--config", s(&conf), "aggregate"])), 1);
    assert_eq!(code(&popmine(&["--config", s(&dir.path().join("nope.conf")), "aggregate"])), 1);
}

#[test]
fn training_reproduces_the_fixture_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sentiment.json");
    let args = [&["train", "sentiment", "--examples", "sentiment_train.jsonl", "--out", s(&out)][..], &RESOURCES[..]].concat();
    let run = popmine(&args);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("models/sentiment.json")).unwrap());

    let out = dir.path().join("disambig.json");
    let run = popmine(&["train", "disambig", "--examples", "disambig_train.jsonl", "--kb", "kb.jsonl", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("models/disambig.json")).unwrap());

    let run = popmine(&["train", "disambig", "--examples", "disambig_train.jsonl", "--kb", "kb.jsonl", "--holdout", "0.25", "--out", s(&out)]);
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert!(report["heldout"]["accuracy"].as_f64().unwrap() > 0.5);
}

#[test]
fn feed_ingest_skips_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let feed = dir.path().join("feed.xml");
    std::fs::write(
        &feed,
        r#"<?xml version="1.0"?><feed xmlns="http://www.w3.org/2005/Atom"><title>t</title>
<entry><id>urn:1</id><link href="http://blog.pt/1"/><title>Passos Coelho no parlamento</title><updated>2014-03-11T09:00:00Z</updated><summary>Debate quinzenal com o primeiro-ministro.</summary></entry>
<entry><id>urn:2</id><link href="http://blog.pt/2"/><title>Paulo Portas viaja</title><summary>Sem data nesta entrada.</summary></entry>
</feed>"#,
    )
    .unwrap();
    let store = dir.path().join("store");
    let args = ["ingest", "feed", s(&feed), "--store", s(&store), "--source", "blog", "--now", "2014-03-12T00:00:00Z"];
    let first = popmine(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["stored"], 2);
    let again: serde_json::Value = serde_json::from_slice(&popmine(&args).stdout).unwrap();
    assert_eq!((again["stored"].as_u64(), again["duplicates"].as_u64()), (Some(0), Some(2)));
    let out = popmine(&["extract", "--store", s(&store), "--kb", "kb.jsonl"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["mentions"], 2);
}

#[test]
fn profile_round_trips_through_detection() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("it.txt");
    std::fs::write(&sample, "il governo ha deciso di non partecipare alla riunione della commissione europea questa settimana ".repeat(20)).unwrap();
    let prof = dir.path().join("it.tsv");
    assert_eq!(code(&popmine(&["profile", s(&sample), "--lang", "it", "--out", s(&prof)])), 0);
    let docs = dir.path().join("docs.jsonl");
    std::fs::write(
        &docs,
        r#"{"id":"x","source":"news","timestamp":"2014-03-10T10:00:00Z","text":"il governo ha deciso di partecipare alla riunione"}"#,
    )
    .unwrap();
    let store = dir.path().join("store");
    let run = popmine(&["ingest", "jsonl", s(&docs), "--store", s(&store), "--profile", s(&prof), "--allow", "pt,it"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let stored = std::fs::read_to_string(store.join("documents.jsonl")).unwrap();
    assert!(stored.contains(r#""lang":"it""#), "{stored}");
}
