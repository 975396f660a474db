use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Corpus, FacetId, Polarity, QuestionId, TopicId};
use crate::error::Error;

/// Three-level relevance of a question for one facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Grade {
    /// Off-topic, or unanswered when configured that way.
    Zero = 0,
    /// On-topic but answered "no" by this facet.
    One = 1,
    /// Confirms the facet's intent.
    Two = 2,
}

impl Grade {
    pub fn value(self) -> u8 {
        self as u8
    }
}

impl From<Grade> for u8 {
    fn from(g: Grade) -> u8 {
        g as u8
    }
}

impl TryFrom<u8> for Grade {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self, Error> {
        match v {
            0 => Ok(Grade::Zero),
            1 => Ok(Grade::One),
            2 => Ok(Grade::Two),
            _ => Err(Error::Invalid(format!("grade {v} outside 0..=2"))),
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value().fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelConfig {
    /// Grade of a same-topic question the facet never answered.
    pub unanswered_same_topic: Grade,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            unanswered_same_topic: Grade::One,
        }
    }
}

/// Facets that can never be confirmed because none of their questions
/// received a positive answer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelReport {
    pub facets_without_target: Vec<FacetId>,
}

impl LabelReport {
    pub fn is_clean(&self) -> bool {
        self.facets_without_target.is_empty()
    }

    pub fn first_error(&self) -> Option<Error> {
        self.facets_without_target.first().map(|f| {
            Error::Invalid(format!(
                "facet {f} has no question with a positive answer; its conversations can never succeed"
            ))
        })
    }
}

/// y(q | topic, facet) for every candidate question.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    facet_topic: BTreeMap<FacetId, TopicId>,
    question_topic: BTreeMap<QuestionId, TopicId>,
    same_topic: BTreeMap<(FacetId, QuestionId), Grade>,
    report: LabelReport,
}

impl LabelTable {
    /// Grade under the three-argument form; any topic mismatch is grade 0.
    pub fn grade_in(&self, topic: TopicId, facet: FacetId, question: QuestionId) -> Grade {
        match self.facet_topic.get(&facet) {
            Some(t) if *t == topic => self.grade(facet, question),
            _ => Grade::Zero,
        }
    }

    /// Grade of `question` for `facet`. Unknown ids grade 0.
    pub fn grade(&self, facet: FacetId, question: QuestionId) -> Grade {
        self.get(facet, question).unwrap_or(Grade::Zero)
    }

    /// `None` when either id is not part of the labelled corpus.
    pub fn get(&self, facet: FacetId, question: QuestionId) -> Option<Grade> {
        let ft = self.facet_topic.get(&facet)?;
        let qt = self.question_topic.get(&question)?;
        if ft != qt {
            return Some(Grade::Zero);
        }
        self.same_topic.get(&(facet, question)).copied()
    }

    /// Same-topic entries of one facet in question-id order.
    pub fn facet_entries(&self, facet: FacetId) -> impl Iterator<Item = (QuestionId, Grade)> + '_ {
        self.same_topic
            .range((facet, QuestionId(0))..=(facet, QuestionId(u32::MAX)))
            .map(|((_, q), g)| (*q, *g))
    }

    pub fn count(&self, grade: Grade) -> usize {
        self.same_topic.values().filter(|g| **g == grade).count()
    }

    pub fn report(&self) -> &LabelReport {
        &self.report
    }
}

pub fn assign_labels(corpus: &Corpus, config: LabelConfig) -> LabelTable {
    let facet_topic: BTreeMap<_, _> = corpus.facets().map(|f| (f.id, f.topic_id)).collect();
    let question_topic: BTreeMap<_, _> = corpus.questions().map(|q| (q.id, q.topic_id)).collect();
    let mut same_topic = BTreeMap::new();
    let mut report = LabelReport::default();
    for facet in corpus.facets() {
        let mut has_target = false;
        for q in corpus.questions_of(facet.topic_id) {
            let grade = match corpus.answer(facet.id, q.id).map(|a| a.polarity) {
                Some(Polarity::Positive) => {
                    has_target = true;
                    Grade::Two
                }
                Some(Polarity::Negative) => Grade::One,
                None => config.unanswered_same_topic,
            };
            same_topic.insert((facet.id, q.id), grade);
        }
        if !has_target {
            log::warn!("facet {} has no positively answered question", facet.id);
            report.facets_without_target.push(facet.id);
        }
    }
    LabelTable {
        facet_topic,
        question_topic,
        same_topic,
        report,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn rule_table_on_three_question_facet() {
        let c = small();
        let l = assign_labels(&c, LabelConfig::default());
        let f = FacetId(10);
        let grades: Vec<_> = [1, 2, 3].map(|q| l.grade(f, QuestionId(q))).to_vec();
        assert_eq!(grades, vec![Grade::Two, Grade::One, Grade::One]);

        let strict = assign_labels(
            &c,
            LabelConfig {
                unanswered_same_topic: Grade::Zero,
            },
        );
        assert_eq!(strict.grade(f, QuestionId(3)), Grade::Zero);
    }

    #[test]
    fn cross_topic_is_zero() {
        let l = assign_labels(&small(), LabelConfig::default());
        assert_eq!(l.grade(FacetId(10), QuestionId(9)), Grade::Zero);
        assert_eq!(l.grade(FacetId(20), QuestionId(1)), Grade::Zero);
        assert_eq!(l.grade_in(TopicId(2), FacetId(10), QuestionId(1)), Grade::Zero);
        assert_eq!(l.grade_in(TopicId(1), FacetId(10), QuestionId(1)), Grade::Two);
    }

    #[test]
    fn positives_are_conserved() {
        let c = small();
        let l = assign_labels(&c, LabelConfig::default());
        assert_eq!(l.count(Grade::Two), c.counts().positive_answers);
        assert!(l.report().is_clean());
    }

    #[test]
    fn facet_without_positive_is_flagged() {
        let c = Corpus::from_parts(
            vec![topic(1, "a")],
            vec![facet(10, 1), facet(11, 1)],
            vec![question(1, 1, "q")],
            vec![answer(10, 1, true)],
        )
        .unwrap();
        let l = assign_labels(&c, LabelConfig::default());
        assert_eq!(l.report().facets_without_target, vec![FacetId(11)]);
        assert!(l.report().first_error().unwrap().to_string().contains("11"));
    }

    #[test]
    fn grade_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Grade::Two).unwrap(), "2");
        assert_eq!(serde_json::from_str::<Grade>("1").unwrap(), Grade::One);
        assert!(serde_json::from_str::<Grade>("3").is_err());
    }
}
