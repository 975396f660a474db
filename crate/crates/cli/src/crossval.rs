//! Five-fold cross-validation: per rotation, neural scorers are trained on
//! the training folds, the grid is searched on the validation fold and the
//! chosen setting is scored on the test fold.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufWriter;

use anyhow::Context;
use clap::{Args, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use clarq::corpus::{Role, Rotation};
use clarq::eval::{crossval_run, cumulative_success, evaluate_doc_run, MetricsReport, Run};
use clarq::neural::ModelKind;
use clarq::simulator::{run_experiment, write_transcripts, PolicyKind, Transcript};

use crate::commands::{add_breakdowns, cq_report, doc_report, DocInputs};
use crate::config::ExperimentConfig;
use crate::setup::{build_policy, needs_init, push, write_json, Common, Models, PolicyParams, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Question selection; tunes the policy's own hyperparameters.
    Cq,
    /// Document retrieval after the conversation; tunes w.
    Doc,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, value_enum, default_value = "cq")]
    task: Task,
    /// Output file stem (default: crossval-<policy>-<task>).
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: PolicyParams,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldSummary {
    pub rotation: u8,
    pub selected: usize,
    pub candidate: Candidate,
    /// None when the grid has one entry and validation was skipped.
    pub validation_mean: Option<f64>,
    pub test_queries: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossvalOutput {
    pub policy: PolicyKind,
    pub task: Task,
    pub folds: Vec<FoldSummary>,
    pub pooled_mean: f64,
    /// Pooled test-fold report.
    pub report: MetricsReport,
}

fn grid(cfg: &ExperimentConfig, task: Task) -> Vec<Candidate> {
    let base = Candidate {
        params: PolicyParams::from_config(cfg),
        w: cfg.w,
    };
    if task == Task::Doc {
        return cfg.grids.w.iter().map(|&w| Candidate { w, ..base }).collect();
    }
    match cfg.policy.kind {
        PolicyKind::Mmr => cfg
            .grids
            .lambda
            .iter()
            .map(|&lambda| Candidate {
                params: PolicyParams { lambda, ..base.params },
                ..base
            })
            .collect(),
        PolicyKind::Singleneg => cfg
            .grids
            .alpha
            .iter()
            .flat_map(|&alpha| {
                cfg.grids.terms.iter().map(move |&terms| Candidate {
                    params: PolicyParams {
                        alpha,
                        terms,
                        ..base.params
                    },
                    ..base
                })
            })
            .collect(),
        _ => vec![base],
    }
}

fn to_core(e: anyhow::Error) -> clarq::Error {
    match e.downcast::<clarq::Error>() {
        Ok(c) => c,
        Err(e) => clarq::Error::Invalid(format!("{e:#}")),
    }
}

struct State<'s> {
    setup: &'s Setup,
    models: BTreeMap<u8, Models>,
    transcripts: HashMap<(u8, Role, String), Vec<Transcript>>,
}

impl State<'_> {
    fn models(&mut self, r: Rotation) -> anyhow::Result<Models> {
        if let Some(m) = self.models.get(&r.index()) {
            return Ok(m.clone());
        }
        let cfg = &self.setup.cfg;
        let mut m = Models::default();
        if needs_init(cfg) {
            info!("rotation {}: training initial scorer", r.index());
            m.init = Some(self.setup.train(ModelKind::Init, r, None)?.init_model()?);
        }
        if cfg.policy.kind == PolicyKind::MmrNeural {
            info!("rotation {}: training MMR scorer", r.index());
            m.mmr = Some(self.setup.train(ModelKind::Mmrbert, r, None)?.mmr_model()?);
        }
        self.models.insert(r.index(), m.clone());
        Ok(m)
    }

    fn simulate(&mut self, r: Rotation, role: Role, params: &PolicyParams) -> anyhow::Result<Vec<Transcript>> {
        let key = (r.index(), role, serde_json::to_string(params)?);
        if let Some(t) = self.transcripts.get(&key) {
            return Ok(t.clone());
        }
        let models = self.models(r)?;
        let policy = build_policy(&self.setup.cfg, params, &models)?;
        let seeds = self.setup.seeds_for(&self.setup.topics(r, role));
        let exp = run_experiment(&seeds, &policy, &self.setup.world(), &self.setup.cfg.conversation())?;
        if let Some(t) = exp.transcripts.iter().find(|t| t.error.is_some()) {
            anyhow::bail!(
                "conversation {} failed: {}",
                t.qid,
                t.error.as_deref().unwrap_or_default()
            );
        }
        self.transcripts.insert(key, exp.transcripts.clone());
        Ok(exp.transcripts)
    }
}

pub fn run(a: CrossvalArgs) -> anyhow::Result<()> {
    let mut flags = Vec::new();
    push(&mut flags, "policy.kind", a.policy.as_deref())?;
    let cfg = a.common.load(flags)?;
    cfg.seed()?;
    cfg.echo()?;
    let kind = cfg.policy.kind;
    let tag = a.tag.unwrap_or_else(|| {
        let task = if a.task == Task::Cq { "cq" } else { "doc" };
        format!("crossval-{}-{task}", kind.name())
    });
    let candidates = grid(&cfg, a.task);
    let setup = Setup::new(cfg)?;
    let docs = match a.task {
        Task::Doc => Some(DocInputs::load(&setup.cfg)?),
        Task::Cq => None,
    };
    let mut state = State {
        setup: &setup,
        models: BTreeMap::new(),
        transcripts: HashMap::new(),
    };
    let mut test_per_query = BTreeMap::new();
    let mut test_runs: Vec<Run> = Vec::new();
    let mut test_transcripts: Vec<Transcript> = Vec::new();

    let cv = crossval_run(&setup.folds, &candidates, |r, cand, role| {
        let transcripts = state.simulate(r, role, &cand.params).map_err(to_core)?;
        let exp = clarq::simulator::Experiment {
            transcripts: transcripts.clone(),
        };
        let (run, report) = match &docs {
            None => {
                let run = exp.run(&tag);
                let report = cq_report(&setup, &run, &tag, setup.cfg.ideal).map_err(to_core)?;
                (run, report)
            }
            Some(d) => {
                let run = d.run(&setup, &transcripts, cand.w, &tag).map_err(to_core)?;
                let eval = evaluate_doc_run(&run, &d.qrels)?;
                (run, doc_report(&tag, &eval))
            }
        };
        if role == Role::Test {
            test_per_query.extend(report.per_query.clone());
            test_runs.push(run);
            test_transcripts.extend(transcripts);
        }
        Ok(report.metric("MRR"))
    })?;

    let mut report = MetricsReport::new(&tag, test_per_query);
    if a.task == Task::Cq {
        add_breakdowns(&mut report, &setup)?;
        let limits: Vec<usize> = (1..=setup.cfg.turns).collect();
        report.success = cumulative_success(&test_transcripts, &limits);
    }
    let output = CrossvalOutput {
        policy: kind,
        task: a.task,
        folds: cv
            .folds
            .iter()
            .map(|f| FoldSummary {
                rotation: f.rotation,
                selected: f.selected,
                candidate: f.candidate,
                validation_mean: Some(f.validation_mean).filter(|v| v.is_finite()),
                test_queries: f.test.len(),
            })
            .collect(),
        pooled_mean: cv.pooled_mean,
        report,
    };

    let out = &setup.cfg.out_dir;
    let mut pooled = Run::new(&tag);
    for r in test_runs {
        pooled.queries.extend(r.queries);
    }
    pooled.queries.sort_by(|a, b| a.0.cmp(&b.0));
    pooled.write(out.join(format!("{tag}.run")))?;
    let tpath = out.join(format!("{tag}.transcripts.jsonl"));
    let mut w = BufWriter::new(File::create(&tpath).with_context(|| format!("writing {}", tpath.display()))?);
    write_transcripts(&mut w, &test_transcripts)?;
    drop(w);
    let path = out.join(format!("{tag}.json"));
    write_json(&path, &output)?;
    println!(
        "{}",
        json!({
            "output": path,
            "pooled_mean": output.pooled_mean,
            "queries": output.report.per_query.len(),
            "selected": output.folds.iter().map(|f| f.candidate).collect::<Vec<_>>(),
        })
    );
    Ok(())
}
