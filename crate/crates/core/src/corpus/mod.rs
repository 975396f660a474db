//! Corpus ingestion: topics, facets, candidate questions and the yes/no
//! answers each facet gives to each question.

mod folds;
mod labels;
mod seeds;
mod training;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use folds::{make_folds, FoldAssignment, Role, Rotation, NUM_FOLDS};
pub use labels::{assign_labels, Grade, LabelConfig, LabelReport, LabelTable};
pub use seeds::{expand_conversations, ConversationSeed, SeedKind};
pub use training::{
    build_training_sets, history_prefixes, PairEntry, TrainingMode, TrainingSet, TrainingSetConfig, TripletEntry,
};

/// Version tag written into serialized corpora.
pub const CORPUS_SCHEMA_VERSION: u32 = 1;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_newtype!(TopicId);
id_newtype!(FacetId);
id_newtype!(QuestionId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicType {
    Faceted,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetType {
    Informational,
    Navigational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// The reduced answer text the simulated user utters.
    pub fn surface_text(self) -> &'static str {
        match self {
            Polarity::Positive => "yes",
            Polarity::Negative => "no",
        }
    }

    /// Reduce a free-text answer to a polarity. Anything that does not open
    /// with "yes" counts as negative feedback, including answers to
    /// questions that were not yes/no questions.
    pub fn from_answer_text(text: &str) -> Self {
        match crate::retrieval::tokenize(text).first().map(String::as_str) {
            Some("yes") => Polarity::Positive,
            _ => Polarity::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: TopicId,
    pub text: String,
    #[serde(rename = "type")]
    pub topic_type: TopicType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub id: FacetId,
    pub topic_id: TopicId,
    pub description: String,
    #[serde(rename = "type")]
    pub facet_type: FacetType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: QuestionId,
    pub topic_id: TopicId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub facet_id: FacetId,
    pub question_id: QuestionId,
    pub polarity: Polarity,
    pub surface_text: String,
}

impl AnswerRecord {
    pub fn new(facet_id: FacetId, question_id: QuestionId, polarity: Polarity) -> Self {
        Self {
            facet_id,
            question_id,
            polarity,
            surface_text: polarity.surface_text().to_owned(),
        }
    }
}

/// Answer line as it appears in the input file. Either an explicit
/// polarity or a free-text answer must be present.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnswer {
    facet_id: FacetId,
    question_id: QuestionId,
    #[serde(default)]
    polarity: Option<Polarity>,
    #[serde(default)]
    answer: Option<String>,
}

/// A fully cross-referenced corpus. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    topics: BTreeMap<TopicId, Topic>,
    facets: BTreeMap<FacetId, Facet>,
    questions: BTreeMap<QuestionId, Question>,
    answers: BTreeMap<(FacetId, QuestionId), AnswerRecord>,
}

#[derive(Serialize, Deserialize)]
struct CorpusDocument {
    schema_version: u32,
    topics: Vec<Topic>,
    facets: Vec<Facet>,
    questions: Vec<Question>,
    answers: Vec<AnswerRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusCounts {
    pub topics: usize,
    pub faceted_topics: usize,
    pub ambiguous_topics: usize,
    pub facets: usize,
    pub informational_facets: usize,
    pub navigational_facets: usize,
    pub questions: usize,
    pub answers: usize,
    pub positive_answers: usize,
}

impl Corpus {
    /// Cross-reference and validate the four record sets.
    pub fn from_parts(
        topics: Vec<Topic>,
        facets: Vec<Facet>,
        questions: Vec<Question>,
        answers: Vec<AnswerRecord>,
    ) -> Result<Self> {
        let mut topic_map = BTreeMap::new();
        for t in topics {
            if t.text.trim().is_empty() {
                return Err(Error::Invalid(format!("topic {} has empty text", t.id)));
            }
            let id = t.id;
            if topic_map.insert(id, t).is_some() {
                return Err(Error::Duplicate {
                    kind: "topic",
                    id: id.to_string(),
                });
            }
        }

        let mut facet_map = BTreeMap::new();
        for f in facets {
            if !topic_map.contains_key(&f.topic_id) {
                return Err(Error::Dangling {
                    kind: "topic",
                    id: f.topic_id.to_string(),
                    context: format!(" (referenced by facet {})", f.id),
                });
            }
            let id = f.id;
            if facet_map.insert(id, f).is_some() {
                return Err(Error::Duplicate {
                    kind: "facet",
                    id: id.to_string(),
                });
            }
        }

        let mut question_map = BTreeMap::new();
        for q in questions {
            if q.text.trim().is_empty() {
                return Err(Error::Invalid(format!("question {} has empty text", q.id)));
            }
            if !topic_map.contains_key(&q.topic_id) {
                return Err(Error::Dangling {
                    kind: "topic",
                    id: q.topic_id.to_string(),
                    context: format!(" (referenced by question {})", q.id),
                });
            }
            let id = q.id;
            if question_map.insert(id, q).is_some() {
                return Err(Error::Duplicate {
                    kind: "question",
                    id: id.to_string(),
                });
            }
        }

        let mut answer_map = BTreeMap::new();
        for a in answers {
            let facet = facet_map.get(&a.facet_id).ok_or_else(|| Error::Dangling {
                kind: "facet",
                id: a.facet_id.to_string(),
                context: format!(" (referenced by answer to question {})", a.question_id),
            })?;
            let question: &Question = question_map.get(&a.question_id).ok_or_else(|| Error::Dangling {
                kind: "question",
                id: a.question_id.to_string(),
                context: format!(" (referenced by answer of facet {})", a.facet_id),
            })?;
            if question.topic_id != facet.topic_id {
                return Err(Error::Invalid(format!(
                    "answer links facet {} (topic {}) to question {} (topic {})",
                    facet.id, facet.topic_id, question.id, question.topic_id
                )));
            }
            if a.surface_text != a.polarity.surface_text() {
                return Err(Error::Invalid(format!(
                    "answer ({}, {}) surface text {:?} does not match its polarity",
                    a.facet_id, a.question_id, a.surface_text
                )));
            }
            let key = (a.facet_id, a.question_id);
            if answer_map.insert(key, a).is_some() {
                return Err(Error::Duplicate {
                    kind: "answer",
                    id: format!("({}, {})", key.0, key.1),
                });
            }
        }

        Ok(Self {
            topics: topic_map,
            facets: facet_map,
            questions: question_map,
            answers: answer_map,
        })
    }

    pub fn topics(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values()
    }

    pub fn facets(&self) -> impl Iterator<Item = &Facet> {
        self.facets.values()
    }

    pub fn questions(&self) -> impl Iterator<Item = &Question> {
        self.questions.values()
    }

    pub fn answers(&self) -> impl Iterator<Item = &AnswerRecord> {
        self.answers.values()
    }

    pub fn topic(&self, id: TopicId) -> Option<&Topic> {
        self.topics.get(&id)
    }

    pub fn facet(&self, id: FacetId) -> Option<&Facet> {
        self.facets.get(&id)
    }

    pub fn question(&self, id: QuestionId) -> Option<&Question> {
        self.questions.get(&id)
    }

    pub fn answer(&self, facet: FacetId, question: QuestionId) -> Option<&AnswerRecord> {
        self.answers.get(&(facet, question))
    }

    pub fn facets_of(&self, topic: TopicId) -> impl Iterator<Item = &Facet> {
        self.facets.values().filter(move |f| f.topic_id == topic)
    }

    pub fn questions_of(&self, topic: TopicId) -> impl Iterator<Item = &Question> {
        self.questions.values().filter(move |q| q.topic_id == topic)
    }

    /// Same corpus restricted to the given topics.
    pub fn restrict_topics(&self, keep: impl Fn(TopicId) -> bool) -> Corpus {
        let topics: BTreeMap<_, _> = self
            .topics
            .iter()
            .filter(|(id, _)| keep(**id))
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        let facets: BTreeMap<_, _> = self
            .facets
            .iter()
            .filter(|(_, f)| topics.contains_key(&f.topic_id))
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        let questions: BTreeMap<_, _> = self
            .questions
            .iter()
            .filter(|(_, q)| topics.contains_key(&q.topic_id))
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        let answers = self
            .answers
            .iter()
            .filter(|((f, _), _)| facets.contains_key(f))
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        Corpus {
            topics,
            facets,
            questions,
            answers,
        }
    }

    pub fn counts(&self) -> CorpusCounts {
        let faceted = self.topics().filter(|t| t.topic_type == TopicType::Faceted).count();
        let informational = self
            .facets()
            .filter(|f| f.facet_type == FacetType::Informational)
            .count();
        CorpusCounts {
            topics: self.topics.len(),
            faceted_topics: faceted,
            ambiguous_topics: self.topics.len() - faceted,
            facets: self.facets.len(),
            informational_facets: informational,
            navigational_facets: self.facets.len() - informational,
            questions: self.questions.len(),
            answers: self.answers.len(),
            positive_answers: self.answers().filter(|a| a.polarity == Polarity::Positive).count(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CorpusDocument {
            schema_version: CORPUS_SCHEMA_VERSION,
            topics: self.topics.values().cloned().collect(),
            facets: self.facets.values().cloned().collect(),
            questions: self.questions.values().cloned().collect(),
            answers: self.answers.values().cloned().collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CorpusDocument = serde_json::from_str(text)?;
        if doc.schema_version != CORPUS_SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported corpus schema version {} (expected {})",
                doc.schema_version, CORPUS_SCHEMA_VERSION
            )));
        }
        Self::from_parts(doc.topics, doc.facets, doc.questions, doc.answers)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Read a line-delimited JSON file. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Load and cross-reference the four corpus files.
pub fn load_corpus(
    topics_path: impl AsRef<Path>,
    facets_path: impl AsRef<Path>,
    questions_path: impl AsRef<Path>,
    answers_path: impl AsRef<Path>,
) -> Result<Corpus> {
    let topics: Vec<Topic> = read_jsonl(topics_path.as_ref())?;
    let facets: Vec<Facet> = read_jsonl(facets_path.as_ref())?;
    let questions: Vec<Question> = read_jsonl(questions_path.as_ref())?;
    let answers_path = answers_path.as_ref();
    let raw: Vec<RawAnswer> = read_jsonl(answers_path)?;
    let mut answers = Vec::with_capacity(raw.len());
    for (i, r) in raw.into_iter().enumerate() {
        let polarity = match (r.polarity, r.answer.as_deref()) {
            (Some(p), _) => p,
            (None, Some(text)) => Polarity::from_answer_text(text),
            (None, None) => {
                return Err(Error::Malformed {
                    path: answers_path.to_path_buf(),
                    line: i + 1,
                    message: "answer record needs `polarity` or `answer`".into(),
                })
            }
        };
        answers.push(AnswerRecord::new(r.facet_id, r.question_id, polarity));
    }
    Corpus::from_parts(topics, facets, questions, answers)
}
