use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_jsonl, ConversationSeed, FacetId, Polarity, QuestionId, TopicId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Confirmed,
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub q: QuestionId,
    #[serde(with = "yes_no")]
    pub a: Polarity,
}

/// One finished conversation. The first turn of a one-turn seed is its
/// preset question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub qid: String,
    pub topic: TopicId,
    pub facet: FacetId,
    pub turns: Vec<Turn>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Transcript {
    pub(crate) fn new(seed: &ConversationSeed, history: Vec<(QuestionId, Polarity)>, error: Option<String>) -> Self {
        let outcome = match history.last() {
            Some((_, Polarity::Positive)) => Outcome::Confirmed,
            _ => Outcome::Exhausted,
        };
        Self {
            qid: seed.qid(),
            topic: seed.topic_id,
            facet: seed.facet_id,
            turns: history.into_iter().map(|(q, a)| Turn { q, a }).collect(),
            outcome,
            error,
        }
    }

    pub fn asked(&self) -> Vec<QuestionId> {
        self.turns.iter().map(|t| t.q).collect()
    }

    /// Turn (1-based) at which the intent was confirmed.
    pub fn confirmed_at(&self) -> Option<usize> {
        (self.outcome == Outcome::Confirmed).then_some(self.turns.len())
    }
}

mod yes_no {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::corpus::Polarity;

    pub fn serialize<S: Serializer>(p: &Polarity, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(p.surface_text())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Polarity, D::Error> {
        match String::deserialize(d)?.as_str() {
            "yes" => Ok(Polarity::Positive),
            "no" => Ok(Polarity::Negative),
            other => Err(serde::de::Error::custom(format!(
                "answer must be yes or no, got {other:?}"
            ))),
        }
    }
}

pub fn write_transcripts(out: &mut impl Write, transcripts: &[Transcript]) -> Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut *out, t)?;
        out.write_all(b"\n").map_err(|e| Error::io("<transcripts>", e))?;
    }
    Ok(())
}

pub fn read_transcripts(path: impl AsRef<Path>) -> Result<Vec<Transcript>> {
    read_jsonl(path.as_ref())
}
