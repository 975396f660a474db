//! Loading shared by the experiment commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;
use serde_json::Value;

use clarq::corpus::{
    assign_labels, expand_conversations, make_folds, ConversationSeed, Corpus, FoldAssignment, LabelTable, QuestionId,
    Role, Rotation, TopicId,
};
use clarq::neural::{ModelFile, ModelKind};
use clarq::pipeline::{fit_encoder, train_model};
use clarq::retrieval::{index_questions, question_pools, CandidatePool, InvertedIndex, Smoothing};
use clarq::simulator::{MmrNeuralModel, NeuralInitModel, Policy, PolicyKind, Similarity, World};

use crate::config::{parse_override, ExperimentConfig, SimilarityKind};

/// Options every experiment command accepts. Explicit flags win over
/// `--set`, which wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed (required here or in the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus file written by `ingest`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Override any config key, e.g. `--set policy.lambda=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub set: Vec<(String, Value)>,
}

impl Common {
    pub fn load(&self, mut flags: Vec<(String, Value)>) -> anyhow::Result<ExperimentConfig> {
        let mut overrides = self.set.clone();
        if let Some(s) = self.seed {
            overrides.push(("seed".into(), s.into()));
        }
        push_path(&mut overrides, "corpus", self.corpus.as_deref());
        push_path(&mut overrides, "out_dir", self.out_dir.as_deref());
        overrides.append(&mut flags);
        ExperimentConfig::load(self.config.as_deref(), &overrides)
    }
}

pub fn push_path(overrides: &mut Vec<(String, Value)>, key: &str, path: Option<&Path>) {
    if let Some(p) = path {
        overrides.push((key.into(), Value::String(p.display().to_string())));
    }
}

pub fn push<T: Serialize>(overrides: &mut Vec<(String, Value)>, key: &str, v: Option<T>) -> anyhow::Result<()> {
    if let Some(v) = v {
        overrides.push((key.into(), serde_json::to_value(v)?));
    }
    Ok(())
}

/// Corpus, labels, candidate pools and folds for one configuration.
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub corpus: Corpus,
    pub labels: LabelTable,
    pub index: InvertedIndex<QuestionId>,
    pub pools: BTreeMap<TopicId, CandidatePool>,
    pub folds: FoldAssignment,
    pub seeds: Vec<ConversationSeed>,
}

impl Setup {
    pub fn new(cfg: ExperimentConfig) -> anyhow::Result<Self> {
        let path = cfg.corpus_path()?;
        let corpus = Corpus::read_json(path).with_context(|| format!("loading corpus {}", path.display()))?;
        let labels = assign_labels(&corpus, cfg.labels());
        let index = index_questions(&corpus)?;
        let pools = question_pools(&corpus, &index, question_smoothing(&cfg), cfg.pool_size)?;
        let folds = make_folds(&corpus);
        let seeds = expand_conversations(&corpus, &labels);
        Ok(Self {
            cfg,
            corpus,
            labels,
            index,
            pools,
            folds,
            seeds,
        })
    }

    pub fn world(&self) -> World<'_> {
        World {
            corpus: &self.corpus,
            labels: &self.labels,
            questions: &self.index,
            smoothing: question_smoothing(&self.cfg),
            pools: &self.pools,
        }
    }

    pub fn topics(&self, rotation: Rotation, role: Role) -> Vec<TopicId> {
        let mut t = self.folds.topics_with_role(rotation, role);
        t.sort_unstable();
        t
    }

    pub fn seeds_for(&self, topics: &[TopicId]) -> Vec<ConversationSeed> {
        self.seeds
            .iter()
            .filter(|s| topics.binary_search(&s.topic_id).is_ok())
            .cloned()
            .collect()
    }

    /// Trains `kind` on the training folds of `rotation`.
    pub fn train(&self, kind: ModelKind, rotation: Rotation, base: Option<&ModelFile>) -> anyhow::Result<ModelFile> {
        let topics = self.topics(rotation, Role::Train);
        let encoder = match base {
            Some(m) => m.encoder.clone(),
            None => fit_encoder(&self.corpus, self.cfg.model.hashed_width),
        };
        Ok(train_model(
            kind,
            &self.corpus,
            &self.labels,
            &self.pools,
            &topics,
            encoder,
            &self.cfg.model,
            self.cfg.seed()?,
        )?)
    }
}

fn question_smoothing(cfg: &ExperimentConfig) -> Smoothing {
    Smoothing::dirichlet(cfg.question_mu)
}

/// Hyperparameters of the heuristic policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct PolicyParams {
    pub lambda: f64,
    pub alpha: f64,
    pub terms: usize,
}

impl PolicyParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            lambda: cfg.policy.lambda,
            alpha: cfg.policy.alpha,
            terms: cfg.policy.terms,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Models {
    pub init: Option<Arc<NeuralInitModel>>,
    pub mmr: Option<Arc<MmrNeuralModel>>,
}

impl Models {
    /// Models named in the config, loaded only when the policy needs them.
    pub fn from_config(cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        let mut m = Models::default();
        if needs_init(cfg) {
            let path = cfg
                .init_model
                .as_deref()
                .context("this policy needs an initial scorer: set init_model")?;
            m.init = Some(read_model(path)?.init_model()?);
        }
        if cfg.policy.kind == PolicyKind::MmrNeural {
            let path = cfg
                .mmr_model
                .as_deref()
                .context("this policy needs an MMR scorer: set mmr_model")?;
            m.mmr = Some(read_model(path)?.mmr_model()?);
        }
        Ok(m)
    }
}

pub fn needs_init(cfg: &ExperimentConfig) -> bool {
    match cfg.policy.kind {
        PolicyKind::NeuralInit => true,
        PolicyKind::Mmr => cfg.policy.similarity == SimilarityKind::Neural,
        _ => false,
    }
}

pub fn read_model(path: &Path) -> anyhow::Result<ModelFile> {
    ModelFile::read(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn build_policy(cfg: &ExperimentConfig, params: &PolicyParams, models: &Models) -> anyhow::Result<Policy> {
    let init = || models.init.clone().context("initial scorer not loaded");
    let policy = match cfg.policy.kind {
        PolicyKind::Ql => Policy::Ql,
        PolicyKind::Oracle => Policy::Oracle,
        PolicyKind::Mmr => Policy::Mmr {
            lambda: params.lambda,
            similarity: match cfg.policy.similarity {
                SimilarityKind::Lexical => Similarity::Lexical,
                SimilarityKind::Neural => Similarity::Neural(init()?),
            },
        },
        PolicyKind::Singleneg => Policy::SingleNeg {
            alpha: params.alpha,
            terms: params.terms,
            em: cfg.negative_model,
        },
        PolicyKind::NeuralInit => Policy::NeuralInit(init()?),
        PolicyKind::MmrNeural => Policy::MmrNeural(models.mmr.clone().context("MMR scorer not loaded")?),
    };
    policy.validate()?;
    Ok(policy)
}

pub fn rotation(r: u8) -> anyhow::Result<Rotation> {
    match Rotation::new(r) {
        Some(r) => Ok(r),
        None => bail!("fold rotation must be in 0..5, got {r}"),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
