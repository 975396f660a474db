//! Glue from a labelled corpus and candidate pools to trained model files
//! and runnable policies.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_training_sets, Corpus, LabelTable, QuestionId, TopicId, TrainingMode, TrainingSet, TrainingSetConfig,
};
use crate::error::{Error, Result};
use crate::neural::{
    mmr_examples, pair_examples, train, triplet_examples, Activation, EncoderSpec, LexicalEncoder, LossKind, ModelFile,
    ModelKind, Network, NetworkShape, TrainConfig,
};
use crate::retrieval::CandidatePool;
use crate::simulator::{MmrNeuralModel, NeuralInitModel};

/// Network sizes and training-set construction for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    /// Hidden width of the initial scorer; `None` is a single linear layer.
    pub hidden: Option<usize>,
    /// Width of the shared pair projection in the MMR scorer.
    pub d: usize,
    pub mlp1_hidden: Option<usize>,
    pub mlp2_hidden: Option<usize>,
    pub mlp1_output: Activation,
    /// Longest history prefix used for MMR training (k − 1).
    pub max_history: usize,
    /// Hashed cross-feature buckets of the lexical encoder.
    pub hashed_width: usize,
    pub training_set: TrainingSetConfig,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            hidden: Some(8),
            d: 8,
            mlp1_hidden: None,
            mlp2_hidden: Some(8),
            mlp1_output: Activation::Identity,
            max_history: 4,
            hashed_width: 0,
            training_set: TrainingSetConfig::default(),
        }
    }
}

/// Lexical encoder whose idf comes from every topic and question text.
pub fn fit_encoder(corpus: &Corpus, hashed_width: usize) -> EncoderSpec {
    let texts = corpus
        .topics()
        .map(|t| t.text.as_str())
        .chain(corpus.questions().map(|q| q.text.as_str()));
    EncoderSpec::Lexical(LexicalEncoder::fit(texts, hashed_width))
}

/// Trains one model on the topics in `train_topics`.
pub fn train_model(
    kind: ModelKind,
    corpus: &Corpus,
    labels: &LabelTable,
    pools: &BTreeMap<TopicId, CandidatePool>,
    train_topics: &[TopicId],
    encoder: EncoderSpec,
    settings: &ModelSettings,
    seed: u64,
) -> Result<ModelFile> {
    let pools: BTreeMap<TopicId, Vec<QuestionId>> = train_topics
        .iter()
        .filter_map(|t| pools.get(t).map(|p| (*t, p.ids())))
        .collect();
    let built = encoder.build()?;
    let set_cfg = TrainingSetConfig {
        seed,
        ..settings.training_set
    };
    let mode = match kind {
        ModelKind::Init => TrainingMode::Pairs,
        ModelKind::Minit | ModelKind::Mmrbert => TrainingMode::Triplets,
    };
    let set = build_training_sets(corpus, labels, &pools, mode, &set_cfg);
    for f in set.skipped() {
        log::info!("facet {f} has no usable training entries");
    }
    let (loss_kind, examples, shape) = match (&set, kind) {
        (TrainingSet::Pairs { entries, .. }, ModelKind::Init) => (
            LossKind::Pairwise,
            pair_examples(corpus, entries, &built)?,
            NetworkShape::Init {
                input: encoder.dim(),
                hidden: settings.hidden,
            },
        ),
        (TrainingSet::Triplets { entries, .. }, ModelKind::Minit) => (
            LossKind::Listwise,
            triplet_examples(corpus, entries, &built)?,
            NetworkShape::Init {
                input: encoder.dim(),
                hidden: settings.hidden,
            },
        ),
        (TrainingSet::Triplets { entries, .. }, ModelKind::Mmrbert) => (
            LossKind::MmrHistory,
            mmr_examples(corpus, entries, &pools, &built, settings.max_history)?,
            NetworkShape::Mmr {
                input: encoder.dim(),
                d: settings.d,
                mlp1_hidden: settings.mlp1_hidden,
                mlp2_hidden: settings.mlp2_hidden,
                mlp1_output: settings.mlp1_output,
            },
        ),
        _ => unreachable!("training mode follows the model kind"),
    };
    if examples.is_empty() {
        return Err(Error::Invalid("no training examples in the training folds".into()));
    }
    log::info!("{} training examples for {kind:?}", examples.len());
    let config = TrainConfig::new(loss_kind, seed);
    let network = shape.initialize::<f64>(seed, config.init_range)?;
    let trained = train(&config, &examples, network)?;
    Ok(ModelFile::new(kind, encoder, trained.network, config, trained.trace))
}

impl ModelFile {
    pub fn init_model(&self) -> Result<Arc<NeuralInitModel>> {
        match &self.network {
            Network::Init(s) => Ok(Arc::new(NeuralInitModel {
                scorer: s.clone(),
                encoder: self.encoder.build()?,
            })),
            Network::Mmr(_) => Err(Error::Invalid("expected an initial scorer, found an MMR scorer".into())),
        }
    }

    pub fn mmr_model(&self) -> Result<Arc<MmrNeuralModel>> {
        match &self.network {
            Network::Mmr(s) => Ok(Arc::new(MmrNeuralModel {
                scorer: s.clone(),
                encoder: self.encoder.build()?,
            })),
            Network::Init(_) => Err(Error::Invalid("expected an MMR scorer, found an initial scorer".into())),
        }
    }
}
