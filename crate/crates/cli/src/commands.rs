use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use clarq::corpus::{assign_labels, expand_conversations, load_corpus, make_folds, LabelConfig, Role};
use clarq::eval::{
    breakdown, conversation_doc_run, cumulative_success, evaluate_cq_run, evaluate_doc_run, fisher_randomization,
    summary_tsv, Comparison, DocEvaluation, DocMetrics, GroupKey, Ideal, MetricsReport, Qrels, Run, CQ_METRICS,
};
use clarq::neural::{LossTrace, ModelKind};
use clarq::retrieval::{index_documents, load_documents, Smoothing};
use clarq::simulator::{read_transcripts, run_experiment, write_transcripts, Transcript};

use crate::config::{ExperimentConfig, IdealKind};
use crate::crossval::{self, CrossvalArgs, CrossvalOutput};
use crate::setup::{
    build_policy, push, push_path, read_json, read_model, rotation, write_json, Common, Models, PolicyParams, Setup,
};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the four corpus files and write a single corpus file.
    Ingest(IngestArgs),
    /// Train a scorer on the training folds of one rotation.
    Train(TrainArgs),
    /// Run simulated conversations with one policy.
    Simulate(SimulateArgs),
    /// Score a question run: MRR and NDCG@3/5 under both gain schemes.
    EvalCq(EvalCqArgs),
    /// Retrieve documents after each conversation and score them.
    EvalDoc(EvalDocArgs),
    /// Paired randomization test between two metric reports.
    Significance(SignificanceArgs),
    /// Merge metric reports into summary tables.
    Report(ReportArgs),
    /// Five-fold cross-validation of one policy.
    Crossval(CrossvalArgs),
}

pub fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train(a),
        Command::Simulate(a) => simulate(a),
        Command::EvalCq(a) => eval_cq(a),
        Command::EvalDoc(a) => eval_doc(a),
        Command::Significance(a) => significance(a),
        Command::Report(a) => report(a),
        Command::Crossval(a) => crossval::run(a),
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    facets: PathBuf,
    #[arg(long)]
    questions: PathBuf,
    #[arg(long)]
    answers: PathBuf,
    /// Corpus file to write.
    #[arg(long)]
    out: PathBuf,
    /// Fail when a facet has no positively answered question.
    #[arg(long)]
    strict: bool,
}

fn ingest(a: IngestArgs) -> anyhow::Result<()> {
    let corpus = load_corpus(&a.topics, &a.facets, &a.questions, &a.answers)?;
    let labels = assign_labels(&corpus, LabelConfig::default());
    if a.strict {
        if let Some(e) = labels.report().first_error() {
            return Err(e.into());
        }
    }
    for f in &labels.report().facets_without_target {
        warn!("facet {f} has no positively answered question");
    }
    let seeds = expand_conversations(&corpus, &labels);
    let folds = make_folds(&corpus);
    let report = json!({
        "counts": corpus.counts(),
        "conversations": seeds.len(),
        "facets_without_target": labels.report().facets_without_target,
        "fold_sizes": folds.fold_sizes(),
    });
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(&a.out, corpus.to_json()?).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Init,
    Minit,
    Mmrbert,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Init => ModelKind::Init,
            ModelArg::Minit => ModelKind::Minit,
            ModelArg::Mmrbert => ModelKind::Mmrbert,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Rotation 0..5: fold r tests, fold r+1 validates, the rest train.
    #[arg(long)]
    fold_rotation: u8,
    /// Initial scorer whose encoder an mmrbert model reuses.
    #[arg(long)]
    init_model: Option<PathBuf>,
    /// Model file to write (default: <out_dir>/<model>-r<r>.model.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceFile {
    model: ModelKind,
    rotation: u8,
    trace: LossTrace,
    /// Loss never rose from one epoch to the next.
    monotone: bool,
}

fn monotone(trace: &LossTrace) -> bool {
    let mut prev = trace.initial;
    trace.epochs.iter().all(|&l| {
        let ok = l <= prev;
        prev = l;
        ok
    })
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let mut flags = Vec::new();
    push_path(&mut flags, "init_model", a.init_model.as_deref());
    let cfg = a.common.load(flags)?;
    cfg.seed()?;
    let r = rotation(a.fold_rotation)?;
    let kind = ModelKind::from(a.model);
    let name = format!(
        "{}-r{}",
        serde_json::to_value(kind)?.as_str().unwrap_or("model"),
        r.index()
    );
    let model_path = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join(format!("{name}.model.json")));
    let trace_path = model_path.with_extension("").with_extension("trace.json");
    cfg.echo()?;

    let base = match kind {
        ModelKind::Mmrbert => {
            let path = cfg
                .init_model
                .clone()
                .context("mmrbert reuses an initial scorer's encoder: pass --init-model")?;
            Some((read_model(&path)?, path))
        }
        _ => None,
    };
    let setup = Setup::new(cfg)?;
    let trained = setup.train(kind, r, base.as_ref().map(|b| &b.0));
    let mut model = match trained {
        Ok(m) => m,
        Err(e) => {
            if let Some(clarq::Error::Diverged { epoch, loss, trace }) = e.downcast_ref::<clarq::Error>() {
                let partial = json!({
                    "model": kind,
                    "rotation": r.index(),
                    "epochs": trace,
                    "diverged_at_epoch": epoch,
                    "loss": loss.to_string(),
                });
                write_json(&trace_path, &partial)?;
                return Err(e.context(format!("loss trace written to {}", trace_path.display())));
            }
            return Err(e);
        }
    };
    if let Some((_, path)) = &base {
        model.base_model = Some(path.display().to_string());
    }
    let is_monotone = monotone(&model.loss_trace);
    if !is_monotone {
        warn!("training loss rose between epochs; see {}", trace_path.display());
    }
    if let Some(dir) = model_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    model.write(&model_path)?;
    write_json(
        &trace_path,
        &TraceFile {
            model: kind,
            rotation: r.index(),
            trace: model.loss_trace.clone(),
            monotone: is_monotone,
        },
    )?;
    println!(
        "{}",
        json!({
            "model": model_path,
            "trace": trace_path,
            "initial_loss": model.loss_trace.initial,
            "final_loss": model.loss_trace.last(),
            "monotone": is_monotone,
        })
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// ql, mmr, singleneg, neural_init, mmr_neural or oracle.
    #[arg(long)]
    policy: Option<String>,
    /// Only conversations of this rotation's test fold.
    #[arg(long)]
    fold_rotation: Option<u8>,
    #[arg(long)]
    init_model: Option<PathBuf>,
    #[arg(long)]
    mmr_model: Option<PathBuf>,
    /// Run tag and output file stem (default: the policy name).
    #[arg(long)]
    tag: Option<String>,
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let mut flags = Vec::new();
    push(&mut flags, "policy.kind", a.policy.as_deref())?;
    push_path(&mut flags, "init_model", a.init_model.as_deref());
    push_path(&mut flags, "mmr_model", a.mmr_model.as_deref());
    let cfg = a.common.load(flags)?;
    cfg.seed()?;
    cfg.echo()?;
    let tag = a.tag.unwrap_or_else(|| cfg.policy.kind.name().to_owned());
    let models = Models::from_config(&cfg)?;
    let policy = build_policy(&cfg, &PolicyParams::from_config(&cfg), &models)?;
    let setup = Setup::new(cfg)?;
    let seeds = match a.fold_rotation {
        Some(r) => setup.seeds_for(&setup.topics(rotation(r)?, Role::Test)),
        None => setup.seeds.clone(),
    };
    info!("simulating {} conversations with {tag}", seeds.len());
    let exp = run_experiment(&seeds, &policy, &setup.world(), &setup.cfg.conversation())?;
    let out = &setup.cfg.out_dir;
    let transcripts_path = out.join(format!("{tag}.transcripts.jsonl"));
    let run_path = out.join(format!("{tag}.run"));
    let mut w = BufWriter::new(
        File::create(&transcripts_path).with_context(|| format!("writing {}", transcripts_path.display()))?,
    );
    write_transcripts(&mut w, &exp.transcripts)?;
    drop(w);
    exp.run(&tag).write(&run_path)?;
    let confirmed = exp.transcripts.iter().filter(|t| t.confirmed_at().is_some()).count();
    println!(
        "{}",
        json!({
            "conversations": exp.transcripts.len(),
            "confirmed": confirmed,
            "errors": exp.errors(),
            "transcripts": transcripts_path,
            "run": run_path,
        })
    );
    if exp.errors() > 0 {
        let first = exp
            .transcripts
            .iter()
            .find_map(|t| t.error.as_ref().map(|e| (&t.qid, e)));
        if let Some((qid, e)) = first {
            bail!("{} conversations failed; first: {qid}: {e}", exp.errors());
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalCqArgs {
    #[command(flatten)]
    common: Common,
    /// Question run written by `simulate`.
    #[arg(long)]
    run: PathBuf,
    /// Transcripts for cumulative success per turn.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// NDCG ideal ordering.
    #[arg(long, value_enum)]
    ideal: Option<IdealKind>,
    /// Report name (default: the run tag).
    #[arg(long)]
    name: Option<String>,
}

/// Breakdowns of the primary metric by topic and facet type.
pub fn add_breakdowns(report: &mut MetricsReport, setup: &Setup) -> anyhow::Result<()> {
    let mrr = report.metric("MRR");
    for (key, name) in [(GroupKey::TopicType, "topic_type"), (GroupKey::FacetType, "facet_type")] {
        report
            .breakdowns
            .insert(format!("MRR/{name}"), breakdown(&mrr, &setup.corpus, key)?);
    }
    Ok(())
}

pub fn cq_report(setup: &Setup, run: &Run, name: &str, ideal: IdealKind) -> anyhow::Result<MetricsReport> {
    let ideal = match ideal {
        IdealKind::Asked => Ideal::AskedList,
        IdealKind::Pool => Ideal::Pool(&setup.pools),
    };
    let per_query = evaluate_cq_run(run, &setup.labels, ideal)?;
    let mut report = MetricsReport::new(name, per_query);
    add_breakdowns(&mut report, setup)?;
    Ok(report)
}

fn turn_limits(cfg: &ExperimentConfig) -> Vec<usize> {
    (1..=cfg.turns).collect()
}

fn eval_cq(a: EvalCqArgs) -> anyhow::Result<()> {
    let mut flags = Vec::new();
    push(&mut flags, "ideal", a.ideal)?;
    let cfg = a.common.load(flags)?;
    cfg.echo()?;
    let run = Run::read(&a.run)?;
    let name = a.name.unwrap_or_else(|| run.tag.clone());
    let setup = Setup::new(cfg)?;
    let mut report = cq_report(&setup, &run, &name, setup.cfg.ideal)?;
    if let Some(p) = &a.transcripts {
        let transcripts = read_transcripts(p)?;
        check_transcripts_match(&transcripts, &run)?;
        report.success = cumulative_success(&transcripts, &turn_limits(&setup.cfg));
    }
    let path = setup.cfg.out_dir.join(format!("{name}.cq.json"));
    write_json(&path, &report)?;
    println!(
        "{}",
        json!({ "report": path, "queries": report.per_query.len(), "means": report.means })
    );
    Ok(())
}

fn check_transcripts_match(transcripts: &[Transcript], run: &Run) -> anyhow::Result<()> {
    if transcripts.len() != run.len() || transcripts.iter().any(|t| run.get(&t.qid).is_none()) {
        bail!("transcripts and run cover different conversations");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalDocArgs {
    #[command(flatten)]
    common: Common,
    /// Transcripts whose conversations become document queries.
    #[arg(long, conflicts_with = "run", required_unless_present = "run")]
    transcripts: Option<PathBuf>,
    /// Score an existing document run instead.
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    documents: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Topic weight of the document query.
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    name: Option<String>,
}

pub fn doc_report(name: &str, eval: &DocEvaluation) -> MetricsReport {
    let per_query = eval
        .per_query
        .iter()
        .map(|(q, m)| {
            let values = DocMetrics::NAMES
                .iter()
                .map(|n| n.to_string())
                .zip(m.values())
                .collect();
            (q.clone(), values)
        })
        .collect();
    let mut report = MetricsReport::new(name, per_query);
    report.skipped = eval.skipped.clone();
    report
}

pub struct DocInputs {
    pub index: clarq::retrieval::InvertedIndex<String>,
    pub qrels: Qrels,
}

impl DocInputs {
    pub fn load(cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        let docs_path = cfg.documents.as_deref().context("no documents: set documents")?;
        let qrels_path = cfg.qrels.as_deref().context("no qrels: set qrels")?;
        let docs = load_documents(docs_path).with_context(|| format!("loading {}", docs_path.display()))?;
        Ok(Self {
            index: index_documents(&docs)?,
            qrels: Qrels::read(qrels_path)?,
        })
    }

    pub fn run(&self, setup: &Setup, transcripts: &[Transcript], w: f64, tag: &str) -> anyhow::Result<Run> {
        Ok(conversation_doc_run(
            transcripts,
            &setup.corpus,
            &self.index,
            Smoothing::dirichlet(setup.cfg.document_mu),
            w,
            setup.cfg.doc_depth,
            tag,
        )?)
    }
}

fn eval_doc(a: EvalDocArgs) -> anyhow::Result<()> {
    let mut flags = Vec::new();
    push_path(&mut flags, "documents", a.documents.as_deref());
    push_path(&mut flags, "qrels", a.qrels.as_deref());
    push(&mut flags, "w", a.w)?;
    let cfg = a.common.load(flags)?;
    cfg.echo()?;
    let (run, name) = match (&a.transcripts, &a.run) {
        (Some(t), _) => {
            let setup = Setup::new(cfg.clone())?;
            let inputs = DocInputs::load(&cfg)?;
            let transcripts = read_transcripts(t)?;
            let stem = t.file_name().and_then(|s| s.to_str()).unwrap_or("run");
            let name = a.name.clone().unwrap_or_else(|| {
                stem.trim_end_matches(".jsonl")
                    .trim_end_matches(".transcripts")
                    .to_owned()
            });
            let run = inputs.run(&setup, &transcripts, cfg.w, &name)?;
            let path = cfg.out_dir.join(format!("{name}.doc.run"));
            run.write(&path)?;
            (run, name)
        }
        (None, Some(r)) => {
            let run = Run::read(r)?;
            let name = a.name.clone().unwrap_or_else(|| run.tag.clone());
            (run, name)
        }
        (None, None) => bail!("pass --transcripts or --run"),
    };
    let qrels_path = cfg.qrels.as_deref().context("no qrels: set qrels")?;
    let eval = evaluate_doc_run(&run, &Qrels::read(qrels_path)?)?;
    let report = doc_report(&name, &eval);
    let path = cfg.out_dir.join(format!("{name}.doc.json"));
    write_json(&path, &report)?;
    println!(
        "{}",
        json!({ "report": path, "queries": report.per_query.len(), "skipped": report.skipped.len(), "means": report.means })
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SignificanceArgs {
    #[command(flatten)]
    common: Common,
    /// Metric report of the first system.
    #[arg(long)]
    a: PathBuf,
    /// Metric report of the second system.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "MRR")]
    metric: String,
}

fn compare(a: &MetricsReport, b: &MetricsReport, metric: &str, cfg: &ExperimentConfig) -> anyhow::Result<Comparison> {
    if !a.means.contains_key(metric) {
        bail!("report {} has no metric {metric}", a.name);
    }
    let (x, y) = a.paired(b, metric)?;
    Ok(Comparison {
        against: b.name.clone(),
        metric: metric.to_owned(),
        result: fisher_randomization(&x, &y, cfg.fisher_iterations, cfg.seed()?)?,
    })
}

fn significance(a: SignificanceArgs) -> anyhow::Result<()> {
    let cfg = a.common.load(Vec::new())?;
    let ra = load_report(&a.a)?;
    let rb = load_report(&a.b)?;
    let c = compare(&ra, &rb, &a.metric, &cfg)?;
    println!(
        "{}",
        json!({
            "a": ra.name,
            "b": rb.name,
            "metric": c.metric,
            "mean_a": ra.means[&a.metric],
            "mean_b": rb.means[&a.metric],
            "p_value": c.result.p_value,
            "significant": c.result.significant(),
            "exhaustive": c.result.exhaustive,
        })
    );
    Ok(())
}

/// A metric report or a cross-validation output, read as its pooled report.
fn load_report(path: &Path) -> anyhow::Result<MetricsReport> {
    Ok(load_input(path)?.report)
}

struct ReportInput {
    report: MetricsReport,
    /// Test-fold query counts when the input is a cross-validation output.
    fold_counts: Option<Vec<usize>>,
}

fn load_input(path: &Path) -> anyhow::Result<ReportInput> {
    let value: Value = read_json(path)?;
    if value.get("folds").is_some() {
        let cv: CrossvalOutput = serde_json::from_value(value)
            .with_context(|| format!("{} is not a cross-validation output", path.display()))?;
        Ok(ReportInput {
            fold_counts: Some(cv.folds.iter().map(|f| f.test_queries).collect()),
            report: cv.report,
        })
    } else {
        let report =
            serde_json::from_value(value).with_context(|| format!("{} is not a metric report", path.display()))?;
        Ok(ReportInput {
            report,
            fold_counts: None,
        })
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Metric reports or cross-validation outputs; the first is the baseline.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Metric tested for significance against the baseline.
    #[arg(long, default_value = "MRR")]
    metric: String,
}

#[derive(Debug, Serialize)]
struct Summary {
    metrics: Vec<String>,
    systems: Vec<SystemSummary>,
}

#[derive(Debug, Serialize)]
struct SystemSummary {
    name: String,
    queries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fold_queries: Option<Vec<usize>>,
    means: BTreeMap<String, f64>,
    breakdowns: BTreeMap<String, Vec<clarq::eval::Group>>,
    success: Vec<clarq::eval::SuccessAt>,
    significance: Vec<Comparison>,
}

fn report(a: ReportArgs) -> anyhow::Result<()> {
    let cfg = a.common.load(Vec::new())?;
    cfg.echo()?;
    let mut inputs = a
        .inputs
        .iter()
        .map(|p| load_input(p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    for (input, path) in inputs.iter().zip(&a.inputs) {
        if let Some(counts) = &input.fold_counts {
            let total: usize = counts.iter().sum();
            if total != input.report.per_query.len() {
                bail!(
                    "{}: pooled report has {} queries but the test folds hold {total}",
                    path.display(),
                    input.report.per_query.len()
                );
            }
        }
    }
    let metrics: Vec<String> = {
        let first = &inputs[0].report;
        let known: Vec<&str> = if first.means.contains_key(CQ_METRICS[1]) {
            CQ_METRICS.to_vec()
        } else {
            DocMetrics::NAMES.to_vec()
        };
        known
            .into_iter()
            .filter(|m| inputs.iter().all(|i| i.report.means.contains_key(*m)))
            .map(str::to_owned)
            .collect()
    };
    for i in 1..inputs.len() {
        let c = compare(&inputs[i].report, &inputs[0].report, &a.metric, &cfg)?;
        inputs[i].report.significance.push(c);
    }
    let reports: Vec<MetricsReport> = inputs.iter().map(|i| i.report.clone()).collect();
    let metric_refs: Vec<&str> = metrics.iter().map(String::as_str).collect();
    let tsv = summary_tsv(&reports, &metric_refs);
    let summary = Summary {
        metrics: metrics.clone(),
        systems: inputs
            .into_iter()
            .map(|i| SystemSummary {
                name: i.report.name.clone(),
                queries: i.report.per_query.len(),
                fold_queries: i.fold_counts,
                means: i.report.means,
                breakdowns: i.report.breakdowns,
                success: i.report.success,
                significance: i.report.significance,
            })
            .collect(),
    };
    let tsv_path = cfg.out_dir.join("summary.tsv");
    std::fs::write(&tsv_path, &tsv).with_context(|| format!("writing {}", tsv_path.display()))?;
    write_json(&cfg.out_dir.join("summary.json"), &summary)?;
    print!("{tsv}");
    Ok(())
}
