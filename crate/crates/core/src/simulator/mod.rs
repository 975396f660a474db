//! Simulated clarification conversations: a policy picks the next unasked
//! question, the simulated user answers from the label table, and the
//! conversation stops on the first "yes" or when the turn budget runs out.

mod policy;
mod transcript;

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use policy::{select_next, MmrNeuralModel, NeuralInitModel, Policy, PolicyKind, Similarity};
pub use transcript::{read_transcripts, write_transcripts, Outcome, Transcript, Turn};

use crate::corpus::{ConversationSeed, Corpus, FacetId, Grade, LabelTable, Polarity, QuestionId, TopicId};
use crate::error::{Error, Result};
use crate::eval::Run;
use crate::retrieval::{CandidatePool, InvertedIndex, Smoothing};

/// Default turn limit.
pub const DEFAULT_TURNS: usize = 5;

/// Read-only data shared by every conversation of an experiment.
#[derive(Clone, Copy)]
pub struct World<'a> {
    pub corpus: &'a Corpus,
    pub labels: &'a LabelTable,
    pub questions: &'a InvertedIndex<QuestionId>,
    pub smoothing: Smoothing,
    pub pools: &'a BTreeMap<TopicId, CandidatePool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationState {
    pub topic_id: TopicId,
    pub facet_id: FacetId,
    pub history: Vec<(QuestionId, Polarity)>,
    pub budget: usize,
}

impl ConversationState {
    pub fn asked(&self) -> Vec<QuestionId> {
        self.history.iter().map(|h| h.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConversationConfig {
    /// Turn limit k.
    pub turns: usize,
    /// Whether a seed's preset turn uses up one of the k turns.
    pub preset_counts: bool,
}

impl Default for ConversationConfig {
    fn default() -> Self {
        Self {
            turns: DEFAULT_TURNS,
            preset_counts: true,
        }
    }
}

/// "yes" only for the facet's grade-2 questions.
pub fn user_answer(labels: &LabelTable, facet: FacetId, question: QuestionId) -> Polarity {
    match labels.get(facet, question) {
        Some(Grade::Two) => Polarity::Positive,
        Some(_) => Polarity::Negative,
        None => {
            warn!("no label for facet {facet} question {question}; answering no");
            Polarity::Negative
        }
    }
}

pub fn run_conversation(
    seed: &ConversationSeed,
    policy: &Policy,
    world: &World,
    config: &ConversationConfig,
) -> Transcript {
    let preset = seed.preset_history.len();
    let budget = if config.preset_counts {
        config.turns
    } else {
        config.turns + preset
    };
    let mut state = ConversationState {
        topic_id: seed.topic_id,
        facet_id: seed.facet_id,
        history: seed.preset_history.iter().map(|q| (*q, Polarity::Negative)).collect(),
        budget,
    };
    let empty = CandidatePool {
        topic_id: seed.topic_id,
        entries: Vec::new(),
    };
    let pool = world.pools.get(&seed.topic_id).unwrap_or(&empty);
    let mut error = None;
    while state.history.len() < budget {
        match select_next(policy, world, &state, pool) {
            Ok(q) => {
                let a = user_answer(world.labels, seed.facet_id, q);
                state.history.push((q, a));
                if a == Polarity::Positive {
                    break;
                }
            }
            Err(Error::Exhausted) => break,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    Transcript::new(seed, state.history, error)
}

/// All conversations of an experiment, in seed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub transcripts: Vec<Transcript>,
}

impl Experiment {
    /// Asked questions per conversation as a ranked run, turn order = rank.
    pub fn run(&self, tag: &str) -> Run {
        let mut run = Run::new(tag);
        for t in &self.transcripts {
            let n = t.turns.len();
            run.push(
                &t.qid,
                t.turns
                    .iter()
                    .enumerate()
                    .map(|(i, turn)| (turn.q.to_string(), (n - i) as f64)),
            );
        }
        run
    }

    pub fn errors(&self) -> usize {
        self.transcripts.iter().filter(|t| t.error.is_some()).count()
    }
}

/// Conversations run in parallel; results stay in seed order.
pub fn run_experiment(
    seeds: &[ConversationSeed],
    policy: &Policy,
    world: &World,
    config: &ConversationConfig,
) -> Result<Experiment> {
    if config.turns == 0 {
        return Err(Error::Invalid("turn limit must be at least 1".into()));
    }
    policy.validate()?;
    let transcripts = seeds
        .par_iter()
        .map(|s| run_conversation(s, policy, world, config))
        .collect();
    Ok(Experiment { transcripts })
}

#[cfg(test)]
mod tests;
