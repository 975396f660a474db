use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ConversationState, World};
use crate::corpus::QuestionId;
use crate::error::{Error, Result};
use crate::feedback::{estimate_negative_model, lexical_cosine, mmr_select, singleneg_score, NegativeModelConfig};
use crate::neural::{sigmoid, Encoder, InitScorer, MmrScorer};
use crate::num::by_score_desc;
use crate::retrieval::{tokenize, CandidatePool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Ql,
    Mmr,
    Singleneg,
    NeuralInit,
    MmrNeural,
    Oracle,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ql => "ql",
            PolicyKind::Mmr => "mmr",
            PolicyKind::Singleneg => "singleneg",
            PolicyKind::NeuralInit => "neural_init",
            PolicyKind::MmrNeural => "mmr_neural",
            PolicyKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug)]
pub struct NeuralInitModel {
    pub scorer: InitScorer<f64>,
    pub encoder: Encoder,
}

#[derive(Debug)]
pub struct MmrNeuralModel {
    pub scorer: MmrScorer<f64>,
    pub encoder: Encoder,
}

/// Text similarity f used by heuristic MMR.
#[derive(Debug, Clone)]
pub enum Similarity {
    Lexical,
    /// σ(s(q, x)) with the trained initial scorer.
    Neural(Arc<NeuralInitModel>),
}

impl Similarity {
    fn between(&self, x: &str, question: &str) -> Result<f64> {
        match self {
            Similarity::Lexical => Ok(lexical_cosine(&tokenize(x), &tokenize(question))),
            Similarity::Neural(m) => Ok(sigmoid(m.scorer.score(&m.encoder, question, x)?)),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Policy {
    /// Static QL order of the candidate pool.
    Ql,
    Mmr {
        lambda: f64,
        similarity: Similarity,
    },
    SingleNeg {
        alpha: f64,
        terms: usize,
        em: NegativeModelConfig,
    },
    NeuralInit(Arc<NeuralInitModel>),
    MmrNeural(Arc<MmrNeuralModel>),
    /// Highest grade first; for tests and upper bounds.
    Oracle,
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Ql => PolicyKind::Ql,
            Policy::Mmr { .. } => PolicyKind::Mmr,
            Policy::SingleNeg { .. } => PolicyKind::Singleneg,
            Policy::NeuralInit(_) => PolicyKind::NeuralInit,
            Policy::MmrNeural(_) => PolicyKind::MmrNeural,
            Policy::Oracle => PolicyKind::Oracle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Policy::Mmr { lambda, .. } if !(0.0..=1.0).contains(lambda) => {
                Err(Error::Invalid(format!("MMR lambda {lambda} outside [0, 1]")))
            }
            Policy::SingleNeg { alpha, terms, .. } => {
                if !(0.0..=1.0).contains(alpha) {
                    Err(Error::Invalid(format!("query weight {alpha} outside [0, 1]")))
                } else if *terms == 0 {
                    Err(Error::Invalid("negative model needs at least one term".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn text<'w>(world: &World<'w>, q: QuestionId) -> Result<&'w str> {
    world
        .corpus
        .question(q)
        .map(|q| q.text.as_str())
        .ok_or_else(|| Error::Dangling {
            kind: "question",
            id: q.to_string(),
            context: "candidate pool".into(),
        })
}

fn argmax(scored: impl IntoIterator<Item = Result<(QuestionId, f64)>>) -> Result<QuestionId> {
    let mut all = Vec::new();
    for s in scored {
        let (q, v) = s?;
        if v.is_nan() {
            return Err(Error::NonFinite {
                layer: format!("score of question {q}"),
            });
        }
        all.push((q, v));
    }
    all.into_iter()
        .min_by(|a, b| by_score_desc((&a.0, a.1), (&b.0, b.1)))
        .map(|(q, _)| q)
        .ok_or(Error::Exhausted)
}

/// The policy's pick from `pool ∖ asked`; scores are recomputed every turn.
pub fn select_next(
    policy: &Policy,
    world: &World,
    state: &ConversationState,
    pool: &CandidatePool,
) -> Result<QuestionId> {
    let asked = state.asked();
    let open: Vec<QuestionId> = pool
        .entries
        .iter()
        .map(|e| e.0)
        .filter(|q| !asked.contains(q))
        .collect();
    if open.is_empty() {
        return Err(Error::Exhausted);
    }
    let topic = world
        .corpus
        .topic(state.topic_id)
        .ok_or_else(|| Error::Dangling {
            kind: "topic",
            id: state.topic_id.to_string(),
            context: "conversation".into(),
        })?
        .text
        .as_str();
    match policy {
        Policy::Ql => Ok(open[0]),
        Policy::Oracle => argmax(
            open.iter()
                .map(|q| Ok((*q, f64::from(world.labels.grade(state.facet_id, *q).value())))),
        ),
        Policy::Mmr { lambda, similarity } => {
            let mut rel = Vec::with_capacity(open.len());
            for q in &open {
                rel.push((*q, similarity.between(topic, text(world, *q)?)?));
            }
            let mut sim = std::collections::BTreeMap::new();
            for a in &asked {
                for q in &open {
                    sim.insert((*a, *q), similarity.between(text(world, *a)?, text(world, *q)?)?);
                }
            }
            let relevance = |q: QuestionId| rel.iter().find(|r| r.0 == q).map_or(0.0, |r| r.1);
            mmr_select(&open, &asked, *lambda, relevance, |a, q| sim[&(a, q)])
        }
        Policy::SingleNeg { alpha, terms, em } => {
            if asked.is_empty() {
                return Ok(open[0]);
            }
            let negatives = asked
                .iter()
                .map(|q| Ok(tokenize(text(world, *q)?)))
                .collect::<Result<Vec<_>>>()?;
            let model = estimate_negative_model(&negatives, world.questions.stats(), em)?.truncate(*terms);
            let topic_tokens = tokenize(topic);
            argmax(open.iter().map(|q| {
                Ok((
                    *q,
                    singleneg_score(q, &topic_tokens, &model, *alpha, world.questions, world.smoothing)?,
                ))
            }))
        }
        Policy::NeuralInit(m) => argmax(
            open.iter()
                .map(|q| Ok((*q, m.scorer.score(&m.encoder, text(world, *q)?, topic)?))),
        ),
        Policy::MmrNeural(m) => {
            let history = asked.iter().map(|q| text(world, *q)).collect::<Result<Vec<_>>>()?;
            argmax(
                open.iter()
                    .map(|q| Ok((*q, m.scorer.score(&m.encoder, text(world, *q)?, topic, &history)?))),
            )
        }
    }
}
