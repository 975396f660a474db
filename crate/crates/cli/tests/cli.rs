use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use clarq::corpus::{assign_labels, Corpus, LabelConfig};
use clarq::eval::Run;
use clarq::synthetic::{synthetic, SyntheticPaths, SyntheticSpec};

fn clarq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clarq"))
        .args(args)
        .output()
        .expect("spawn clarq")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
    files: SyntheticPaths,
    corpus: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let files = synthetic(SyntheticSpec::default())
            .unwrap()
            .write_files(dir.path().join("raw"))
            .unwrap();
        let corpus = dir.path().join("corpus.json");
        let out = clarq(&[
            "ingest",
            "--topics",
            s(&files.topics),
            "--facets",
            s(&files.facets),
            "--questions",
            s(&files.questions),
            "--answers",
            s(&files.answers),
            "--out",
            s(&corpus),
        ]);
        let report = stdout_json(&out);
        assert_eq!(report["counts"]["topics"], 10);
        Self { dir, files, corpus }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    /// Arguments shared by the experiment commands.
    fn common(&self) -> Vec<String> {
        vec![
            "--corpus".into(),
            s(&self.corpus).into(),
            "--out-dir".into(),
            s(&self.out()).into(),
            "--seed".into(),
            "7".into(),
        ]
    }

    fn run(&self, cmd: &str, extra: &[&str]) -> Output {
        let mut args: Vec<&str> = vec![cmd];
        let common = self.common();
        args.extend(common.iter().map(String::as_str));
        args.extend_from_slice(extra);
        clarq(&args)
    }
}

#[test]
fn ingest_reports_counts_and_conversations() {
    let f = Fixture::new();
    let out = clarq(&[
        "ingest",
        "--topics",
        s(&f.files.topics),
        "--facets",
        s(&f.files.facets),
        "--questions",
        s(&f.files.questions),
        "--answers",
        s(&f.files.answers),
        "--out",
        s(&f.dir.path().join("again.json")),
        "--strict",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["counts"]["facets"], 40);
    assert_eq!(report["counts"]["questions"], 120);
    assert_eq!(report["conversations"], 400);
    let c = Corpus::read_json(&f.corpus).unwrap();
    assert_eq!(c.counts().answers, 40 * 12);
}

#[test]
fn ingest_dangling_id_exits_one_naming_it() {
    let f = Fixture::new();
    let answers = f.dir.path().join("bad_answers.jsonl");
    let mut text = std::fs::read_to_string(&f.files.answers).unwrap();
    text.push_str("{\"facet_id\": 0, \"question_id\": 98765, \"polarity\": \"negative\"}\n");
    std::fs::write(&answers, text).unwrap();
    let out = clarq(&[
        "ingest",
        "--topics",
        s(&f.files.topics),
        "--facets",
        s(&f.files.facets),
        "--questions",
        s(&f.files.questions),
        "--answers",
        s(&answers),
        "--out",
        s(&f.dir.path().join("bad.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("98765"));
}

#[test]
fn usage_errors_and_missing_seed_exit_one() {
    assert_eq!(clarq(&["simulate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(clarq(&["--help"]).status.code(), Some(0));
    let f = Fixture::new();
    let out = clarq(&["simulate", "--corpus", s(&f.corpus), "--out-dir", s(&f.out())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn train_is_deterministic_and_mmrbert_reuses_the_encoder() {
    let f = Fixture::new();
    let a = f.dir.path().join("a.model.json");
    let b = f.dir.path().join("b.model.json");
    for p in [&a, &b] {
        let out = f.run("train", &["--model", "init", "--fold-rotation", "0", "--out", s(p)]);
        let info = stdout_json(&out);
        assert_eq!(info["monotone"], true);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let trace: Value =
        serde_json::from_str(&std::fs::read_to_string(f.dir.path().join("a.trace.json")).unwrap()).unwrap();
    assert_eq!(trace["trace"]["epochs"].as_array().unwrap().len(), 10);

    let out = f.run("train", &["--model", "mmrbert", "--fold-rotation", "0"]);
    assert_eq!(out.status.code(), Some(1), "mmrbert without an initial model");

    let m = f.dir.path().join("m.model.json");
    let out = f.run(
        "train",
        &[
            "--model",
            "mmrbert",
            "--fold-rotation",
            "0",
            "--init-model",
            s(&a),
            "--out",
            s(&m),
        ],
    );
    stdout_json(&out);
    let init: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    let mmr: Value = serde_json::from_slice(&std::fs::read(&m).unwrap()).unwrap();
    assert_eq!(init["encoder"], mmr["encoder"]);
    assert_eq!(mmr["base_model"], s(&a));
    assert!(f.out().join("config.effective.json").exists());
}

#[test]
fn oracle_simulation_confirms_every_conversation() {
    let f = Fixture::new();
    let info = stdout_json(&f.run("simulate", &["--policy", "oracle"]));
    assert_eq!(info["conversations"], 400);
    assert_eq!(info["confirmed"], 400);
    let lines = std::fs::read_to_string(f.out().join("oracle.transcripts.jsonl")).unwrap();
    assert!(lines.lines().all(|l| l.contains("\"confirmed\"")));
    let run = Run::read(f.out().join("oracle.run")).unwrap();
    assert_eq!(run.len(), 400);
}

#[test]
fn simulate_is_reproducible() {
    let f = Fixture::new();
    stdout_json(&f.run("simulate", &["--policy", "singleneg", "--tag", "x"]));
    let first = std::fs::read(f.out().join("x.transcripts.jsonl")).unwrap();
    stdout_json(&f.run("simulate", &["--policy", "singleneg", "--tag", "x"]));
    assert_eq!(first, std::fs::read(f.out().join("x.transcripts.jsonl")).unwrap());
}

#[test]
fn eval_cq_on_ideal_ordering_scores_one() {
    let f = Fixture::new();
    let corpus = Corpus::read_json(&f.corpus).unwrap();
    let labels = assign_labels(&corpus, LabelConfig::default());
    let mut run = Run::new("ideal");
    for facet in corpus.facets() {
        let mut qs: Vec<_> = corpus
            .questions_of(facet.topic_id)
            .map(|q| (labels.grade(facet.id, q.id).value(), q.id))
            .collect();
        qs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let n = qs.len();
        run.push(
            &format!("{}-{}", facet.topic_id, facet.id),
            qs.iter().enumerate().map(|(i, (_, q))| (q.to_string(), (n - i) as f64)),
        );
    }
    let path = f.dir.path().join("ideal.run");
    run.write(&path).unwrap();
    for ideal in ["asked", "pool"] {
        let info = stdout_json(&f.run("eval-cq", &["--run", s(&path), "--ideal", ideal]));
        assert_eq!(info["queries"], 40);
        for m in ["MRR", "NDCG@3", "NDCG@5", "NDCG@3/multi", "NDCG@5/multi"] {
            assert_eq!(info["means"][m], 1.0, "{m} with {ideal} ideal");
        }
    }
    let report: Value = serde_json::from_slice(&std::fs::read(f.out().join("ideal.cq.json")).unwrap()).unwrap();
    assert!(report["breakdowns"]["MRR/topic_type"].is_array());
}

#[test]
fn significance_of_a_run_against_itself_is_one() {
    let f = Fixture::new();
    stdout_json(&f.run("simulate", &["--policy", "ql"]));
    let run = f.out().join("ql.run");
    let transcripts = f.out().join("ql.transcripts.jsonl");
    stdout_json(&f.run("eval-cq", &["--run", s(&run), "--transcripts", s(&transcripts)]));
    let report = f.out().join("ql.cq.json");
    let sig = stdout_json(&f.run("significance", &["--a", s(&report), "--b", s(&report)]));
    assert_eq!(sig["p_value"], 1.0);
    assert_eq!(sig["significant"], false);
}

#[test]
fn eval_doc_scores_conversation_retrieval() {
    let f = Fixture::new();
    stdout_json(&f.run("simulate", &["--policy", "oracle"]));
    let info = stdout_json(&f.run(
        "eval-doc",
        &[
            "--transcripts",
            s(&f.out().join("oracle.transcripts.jsonl")),
            "--documents",
            s(&f.files.documents),
            "--qrels",
            s(&f.files.qrels),
        ],
    ));
    assert_eq!(info["queries"], 400);
    let mrr = info["means"]["MRR"].as_f64().unwrap();
    assert!(
        mrr > 0.5,
        "confirmed conversations should retrieve their facet's documents, MRR {mrr}"
    );
    assert!(f.out().join("oracle.doc.run").exists());
}

#[test]
fn crossval_report_totals_match_fold_counts() {
    let f = Fixture::new();
    let ql = stdout_json(&f.run("crossval", &["--policy", "ql"]));
    assert_eq!(ql["queries"], 400);
    let mmr = stdout_json(&f.run("crossval", &["--policy", "mmr", "--set", "grids.lambda=[0.0,0.5,1.0]"]));
    assert_eq!(mmr["selected"].as_array().unwrap().len(), 5);
    let out = f.run(
        "report",
        &[
            "--input",
            s(&f.out().join("crossval-ql-cq.json")),
            "--input",
            s(&f.out().join("crossval-mmr-cq.json")),
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(f.out().join("summary.json")).unwrap()).unwrap();
    for sys in summary["systems"].as_array().unwrap() {
        let folds: u64 = sys["fold_queries"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .sum();
        assert_eq!(sys["queries"].as_u64().unwrap(), folds);
    }
    let tsv = std::fs::read_to_string(f.out().join("summary.tsv")).unwrap();
    assert!(tsv.starts_with("method\tMRR"));
    assert_eq!(tsv.lines().count(), 3);
}

#[test]
fn report_rejects_inconsistent_fold_totals() {
    let f = Fixture::new();
    stdout_json(&f.run("crossval", &["--policy", "ql"]));
    let path = f.out().join("crossval-ql-cq.json");
    let mut v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    v["folds"][0]["test_queries"] = Value::from(1);
    let bad = f.dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = f.run("report", &["--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn crossval_trains_neural_scorers_per_rotation() {
    let f = Fixture::new();
    let info = stdout_json(&f.run("crossval", &["--policy", "mmr_neural"]));
    assert_eq!(info["queries"], 400);
    let mean = info["pooled_mean"].as_f64().unwrap();
    assert!(mean > 0.0 && mean <= 1.0);
}

#[test]
fn eval_cq_rejects_a_document_run() {
    let f = Fixture::new();
    let path = f.dir.path().join("docs.run");
    std::fs::write(&path, "0-0 Q0 d0x0x0 1 1.0 docs\n").unwrap();
    let out = f.run("eval-cq", &["--run", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
}
