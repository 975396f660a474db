use serde::{Deserialize, Serialize};

use super::{Corpus, FacetId, Grade, LabelTable, Polarity, QuestionId, TopicId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    ZeroTurn,
    OneTurn,
}

/// Starting state of a simulated conversation. A one-turn seed carries a
/// single question the user already answered "no".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConversationSeed {
    pub topic_id: TopicId,
    pub facet_id: FacetId,
    pub preset_history: Vec<QuestionId>,
    pub seed_kind: SeedKind,
}

impl ConversationSeed {
    pub fn zero_turn(topic_id: TopicId, facet_id: FacetId) -> Self {
        Self {
            topic_id,
            facet_id,
            preset_history: Vec::new(),
            seed_kind: SeedKind::ZeroTurn,
        }
    }

    pub fn one_turn(topic_id: TopicId, facet_id: FacetId, question: QuestionId) -> Self {
        Self {
            topic_id,
            facet_id,
            preset_history: vec![question],
            seed_kind: SeedKind::OneTurn,
        }
    }

    /// Run-file query id: `topic-facet` or `topic-facet-question`.
    pub fn qid(&self) -> String {
        match self.preset_history.first() {
            Some(q) => format!("{}-{}-{}", self.topic_id, self.facet_id, q),
            None => format!("{}-{}", self.topic_id, self.facet_id),
        }
    }
}

/// One zero-turn seed per facet plus one one-turn seed for every question the
/// facet explicitly answered "no".
pub fn expand_conversations(corpus: &Corpus, labels: &LabelTable) -> Vec<ConversationSeed> {
    let mut seeds = Vec::new();
    for facet in corpus.facets() {
        seeds.push(ConversationSeed::zero_turn(facet.topic_id, facet.id));
        for (q, grade) in labels.facet_entries(facet.id) {
            let answered_no = corpus
                .answer(facet.id, q)
                .is_some_and(|a| a.polarity == Polarity::Negative);
            if grade == Grade::One && answered_no {
                seeds.push(ConversationSeed::one_turn(facet.topic_id, facet.id, q));
            }
        }
    }
    seeds
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{assign_labels, LabelConfig};
    use super::*;

    #[test]
    fn unanswered_questions_do_not_seed() {
        let c = small();
        let l = assign_labels(&c, LabelConfig::default());
        let seeds = expand_conversations(&c, &l);
        // facet 10: zero-turn + q2; facet 20: zero-turn. q3 is grade 1 but unanswered.
        assert_eq!(seeds.len(), 3);
        assert_eq!(seeds[1].qid(), "1-10-2");
        assert_eq!(seeds[1].seed_kind, SeedKind::OneTurn);
        assert_eq!(seeds[2].qid(), "2-20");
    }

    #[test]
    fn three_negatives_give_four_seeds() {
        let c = Corpus::from_parts(
            vec![topic(1, "a")],
            vec![facet(10, 1)],
            (1..=4).map(|i| question(i, 1, "q")).collect(),
            vec![
                answer(10, 1, true),
                answer(10, 2, false),
                answer(10, 3, false),
                answer(10, 4, false),
            ],
        )
        .unwrap();
        let l = assign_labels(&c, LabelConfig::default());
        assert_eq!(expand_conversations(&c, &l).len(), 4);
    }

    #[test]
    fn facet_without_negatives_has_one_seed() {
        let c = Corpus::from_parts(
            vec![topic(1, "a")],
            vec![facet(10, 1)],
            vec![question(1, 1, "q")],
            vec![answer(10, 1, true)],
        )
        .unwrap();
        let l = assign_labels(&c, LabelConfig::default());
        let seeds = expand_conversations(&c, &l);
        assert_eq!(seeds, vec![ConversationSeed::zero_turn(TopicId(1), FacetId(10))]);
    }
}
