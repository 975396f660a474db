use serde::{Deserialize, Serialize};

use super::index::InvertedIndex;
use super::lm::{query_weights, score_all, top_k, Smoothing};
use super::tokenize;
use crate::corpus::{QuestionId, TopicId};
use crate::error::{Error, Result};

/// Top-n questions for a topic by query likelihood, score descending with
/// ascending question id on ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub topic_id: TopicId,
    pub entries: Vec<(QuestionId, f64)>,
}

impl CandidatePool {
    pub fn ids(&self) -> Vec<QuestionId> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, q: QuestionId) -> bool {
        self.entries.iter().any(|e| e.0 == q)
    }

    /// Pool without the listed questions, order preserved.
    pub fn without(&self, drop: impl Fn(QuestionId) -> bool) -> Self {
        Self {
            topic_id: self.topic_id,
            entries: self.entries.iter().copied().filter(|e| !drop(e.0)).collect(),
        }
    }
}

pub fn rank_questions_ql(
    topic_id: TopicId,
    topic_text: &str,
    questions: &InvertedIndex<QuestionId>,
    smoothing: Smoothing,
    n: usize,
) -> Result<CandidatePool> {
    if n == 0 {
        return Err(Error::Invalid("pool size must be at least 1".into()));
    }
    smoothing.validate()?;
    let weights = query_weights(&tokenize(topic_text));
    let scores = score_all(&weights, questions, smoothing);
    Ok(CandidatePool {
        topic_id,
        entries: top_k(questions, &scores, n),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_index, ql_score};
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fixture(n: u32) -> (Vec<String>, InvertedIndex<QuestionId>) {
        let vocab = ["rice", "university", "recipe", "houston", "cook", "grain", "texas"];
        let texts: Vec<String> = (0..n)
            .map(|i| {
                (0..(2 + i % 4))
                    .map(|j| vocab[((i * 3 + j * (i % 5 + 1)) % 7) as usize])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let idx = build_index(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| (QuestionId(i as u32), t.as_str())),
        )
        .unwrap();
        (texts, idx)
    }

    #[test]
    fn top_n_equals_full_sort_of_independent_scores() {
        let (_, idx) = fixture(50);
        let sm = Smoothing::dirichlet(100.0);
        let q = "rice university houston";
        let pool = rank_questions_ql(TopicId(1), q, &idx, sm, 10).unwrap();
        let mut all: Vec<(QuestionId, f64)> = idx
            .keys()
            .iter()
            .map(|k| (*k, ql_score(&tokenize(q), k, &idx, sm).unwrap()))
            .collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        assert_eq!(pool.len(), 10);
        for (p, b) in pool.entries.iter().zip(&all) {
            assert_eq!(p.0, b.0);
            assert_abs_diff_eq!(p.1, b.1, epsilon = 1e-9);
        }
    }

    #[test]
    fn ties_prefer_lower_id() {
        let idx = build_index([(QuestionId(4), "x y"), (QuestionId(2), "y x"), (QuestionId(3), "z")]).unwrap();
        let pool = rank_questions_ql(TopicId(0), "x", &idx, Smoothing::dirichlet(10.0), 3).unwrap();
        assert_eq!(pool.ids(), vec![QuestionId(2), QuestionId(4), QuestionId(3)]);
        assert!(rank_questions_ql(TopicId(0), "x", &idx, Smoothing::dirichlet(10.0), 0).is_err());
    }

    proptest! {
        #[test]
        fn truncation_commutes(n in 1usize..40) {
            let (_, idx) = fixture(30);
            let sm = Smoothing::dirichlet(50.0);
            let full = rank_questions_ql(TopicId(1), "cook rice grain", &idx, sm, idx.len()).unwrap();
            let part = rank_questions_ql(TopicId(1), "cook rice grain", &idx, sm, n).unwrap();
            prop_assert_eq!(&full.entries[..n.min(full.len())], &part.entries[..]);
        }
    }
}
