use std::path::Path;
use std::process::{Command, Output};

fn citerec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citerec"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = "\
corpus.path = corpus.jsonl
out = out
methods = tfidf,deepwalk
split.embed_cutoff = 2011
split.scorer_cutoff = 2012
split.query_year = 2012
split.relevance_start = 2012
eval.k = 5
eval.bootstrap = 100
reference.content = synthetic
features.dim = 8
embed.method.deepwalk.dim = 8
scorer.hidden = 8
scorer.epochs = 1
";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = citerec(
        dir.path(),
        &[
            "synth",
            "--corpus",
            "corpus.jsonl",
            "--papers-per-block-per-year",
            "10",
            "--years",
            "5",
            "--seed",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("corpus.truth").exists());
    std::fs::write(dir.path().join("exp.conf"), CONFIG).unwrap();
    dir
}

#[test]
fn ingest_check_counts() {
    let dir = tempfile::tempdir().unwrap();
    let lines = [
        r#"{"id": "A", "title": "a", "abstract": "", "year": 2010, "references": []}"#,
        r#"{"id": "B", "title": "b", "abstract": "", "year": 2011, "references": ["A", "Z"]}"#,
        r#"{"id": "C", "title": "c", "year": 2012}"#,
    ];
    std::fs::write(dir.path().join("c.jsonl"), lines.join("\n")).unwrap();
    let o = citerec(dir.path(), &["ingest-check", "c.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).starts_with("3 papers, 1 edge, 1 dangling\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn malformed_corpus_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let rec = r#"{"id": "A", "title": "a", "abstract": "", "year": 2010, "references": []}"#;
    std::fs::write(dir.path().join("c.jsonl"), format!("{rec}\n{rec}\n")).unwrap();
    let o = citerec(dir.path(), &["ingest-check", "c.jsonl"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("line 2") || stderr(&o).contains(":2:"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_config_key_exits_with_config_error() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.conf"), "scorer.hiden = 3\n").unwrap();
    let o = citerec(dir.path(), &["--config", "bad.conf", "embed"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("scorer.hiden"), "{}", stderr(&o));
}

#[test]
fn evaluate_without_scorer_is_a_missing_artifact() {
    let dir = setup();
    let o = citerec(
        dir.path(),
        &["--config", "exp.conf", "embed", "--method", "tfidf"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir
        .path()
        .join("out/embeddings/tfidf.candidates.emb")
        .exists());
    let o = citerec(
        dir.path(),
        &["--config", "exp.conf", "evaluate", "--method", "tfidf"],
    );
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(
        err.contains("tfidf.scorer") && err.contains("train-scorer"),
        "{err}"
    );
}

#[test]
fn staged_runs_merge_into_one_report() {
    let dir = setup();
    for method in ["tfidf", "deepwalk"] {
        for stage in ["embed", "train-scorer", "recommend", "evaluate"] {
            let o = citerec(
                dir.path(),
                &["--config", "exp.conf", stage, "--method", method],
            );
            assert!(o.status.success(), "{stage} {method}: {}", stderr(&o));
        }
    }
    let tsv = std::fs::read_to_string(dir.path().join("out/recommendations/tfidf.tsv")).unwrap();
    let first: Vec<&str> = tsv.lines().next().unwrap().split('\t').collect();
    assert_eq!(first.len(), 4);
    assert_eq!(first[1], "1");

    let o = citerec(dir.path(), &["--config", "exp.conf", "report"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert_eq!(stdout(&o), report);
    assert!(report.contains("[method deepwalk]") && report.contains("[method tfidf]"));
    assert!(report.contains("[comparison deepwalk vs tfidf]"));

    // the all-in-one run reproduces the staged report
    let o = citerec(
        dir.path(),
        &["--config", "exp.conf", "--out", "again", "run"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("again/report.txt")).unwrap(),
        report
    );
}
