use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, FacetId, Grade, LabelTable, Polarity, QuestionId, TopicId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingMode {
    Pairs,
    Triplets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSetConfig {
    /// Maximum entries per (topic, facet); `None` keeps the full cross product.
    pub cap: Option<usize>,
    pub seed: u64,
}

impl Default for TrainingSetConfig {
    fn default() -> Self {
        Self { cap: Some(50), seed: 0 }
    }
}

/// (relevant, off-topic) question pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub topic_id: TopicId,
    pub facet_id: FacetId,
    pub positive: QuestionId,
    pub negative: QuestionId,
}

/// (grade 2, grade 1, grade 0) question triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletEntry {
    pub topic_id: TopicId,
    pub facet_id: FacetId,
    pub target: QuestionId,
    pub related: QuestionId,
    pub off_topic: QuestionId,
}

impl TripletEntry {
    pub fn members(&self) -> [QuestionId; 3] {
        [self.target, self.related, self.off_topic]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TrainingSet {
    Pairs {
        entries: Vec<PairEntry>,
        skipped: Vec<FacetId>,
    },
    Triplets {
        entries: Vec<TripletEntry>,
        skipped: Vec<FacetId>,
    },
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        match self {
            TrainingSet::Pairs { entries, .. } => entries.len(),
            TrainingSet::Triplets { entries, .. } => entries.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn skipped(&self) -> &[FacetId] {
        match self {
            TrainingSet::Pairs { skipped, .. } | TrainingSet::Triplets { skipped, .. } => skipped,
        }
    }
}

fn facet_rng(seed: u64, facet: FacetId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (facet.0 as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Indices into a cross product of size `total`, subsampled to `cap`.
fn chosen(total: usize, config: &TrainingSetConfig, facet: FacetId) -> Vec<usize> {
    match config.cap {
        Some(cap) if total > cap => {
            let mut idx = index::sample(&mut facet_rng(config.seed, facet), total, cap).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..total).collect(),
    }
}

/// Build pairs or triplets from each facet's candidate pool (`pools` is keyed
/// by topic and lists question ids in pool order). Facets whose pool lacks a
/// member for some slot are skipped.
pub fn build_training_sets(
    corpus: &Corpus,
    labels: &LabelTable,
    pools: &BTreeMap<TopicId, Vec<QuestionId>>,
    mode: TrainingMode,
    config: &TrainingSetConfig,
) -> TrainingSet {
    let mut pairs = Vec::new();
    let mut triplets = Vec::new();
    let mut skipped = Vec::new();
    for facet in corpus.facets() {
        let Some(pool) = pools.get(&facet.topic_id) else {
            continue;
        };
        let by_grade = |g: Grade| -> Vec<QuestionId> {
            pool.iter()
                .copied()
                .filter(|q| labels.grade_in(facet.topic_id, facet.id, *q) == g)
                .collect()
        };
        let (twos, ones, zeros) = (by_grade(Grade::Two), by_grade(Grade::One), by_grade(Grade::Zero));
        match mode {
            TrainingMode::Pairs => {
                let positives: Vec<QuestionId> = pool
                    .iter()
                    .copied()
                    .filter(|q| labels.grade_in(facet.topic_id, facet.id, *q) > Grade::Zero)
                    .collect();
                if positives.is_empty() || zeros.is_empty() {
                    log::info!("facet {}: no relevant or no off-topic candidate, skipped", facet.id);
                    skipped.push(facet.id);
                    continue;
                }
                for i in chosen(positives.len() * zeros.len(), config, facet.id) {
                    pairs.push(PairEntry {
                        topic_id: facet.topic_id,
                        facet_id: facet.id,
                        positive: positives[i / zeros.len()],
                        negative: zeros[i % zeros.len()],
                    });
                }
            }
            TrainingMode::Triplets => {
                if twos.is_empty() || ones.is_empty() || zeros.is_empty() {
                    log::info!("facet {}: incomplete triplet slots in pool, skipped", facet.id);
                    skipped.push(facet.id);
                    continue;
                }
                let inner = ones.len() * zeros.len();
                for i in chosen(twos.len() * inner, config, facet.id) {
                    let rest = i % inner;
                    triplets.push(TripletEntry {
                        topic_id: facet.topic_id,
                        facet_id: facet.id,
                        target: twos[i / inner],
                        related: ones[rest / zeros.len()],
                        off_topic: zeros[rest % zeros.len()],
                    });
                }
            }
        }
    }
    match mode {
        TrainingMode::Pairs => TrainingSet::Pairs {
            entries: pairs,
            skipped,
        },
        TrainingMode::Triplets => TrainingSet::Triplets {
            entries: triplets,
            skipped,
        },
    }
}

/// History set for a triplet: the prefixes ∅, {a}, {a, b}, ... of the
/// facet's negatively answered pool questions (pool order), excluding the
/// triplet's own members, up to `max_len` asked questions.
pub fn history_prefixes(
    corpus: &Corpus,
    pool: &[QuestionId],
    triplet: &TripletEntry,
    max_len: usize,
) -> Vec<Vec<QuestionId>> {
    let members = triplet.members();
    let asked: Vec<QuestionId> = pool
        .iter()
        .copied()
        .filter(|q| !members.contains(q))
        .filter(|q| {
            corpus
                .answer(triplet.facet_id, *q)
                .is_some_and(|a| a.polarity == Polarity::Negative)
        })
        .take(max_len)
        .collect();
    (0..=asked.len()).map(|n| asked[..n].to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{assign_labels, LabelConfig};
    use super::*;

    fn grid_corpus() -> Corpus {
        // topic 1 / facet 10: q1,q2 positive; q3,q4,q5 negative.
        // topic 2: q6..q9 are off-topic for facet 10.
        let mut answers = vec![answer(10, 1, true), answer(10, 2, true)];
        answers.extend((3..=5).map(|q| answer(10, q, false)));
        answers.push(answer(20, 6, true));
        Corpus::from_parts(
            vec![topic(1, "a"), topic(2, "b")],
            vec![facet(10, 1), facet(20, 2)],
            (1..=5)
                .map(|i| question(i, 1, "x"))
                .chain((6..=9).map(|i| question(i, 2, "y")))
                .collect(),
            answers,
        )
        .unwrap()
    }

    fn pool_of(ids: impl IntoIterator<Item = u32>) -> BTreeMap<TopicId, Vec<QuestionId>> {
        BTreeMap::from([(TopicId(1), ids.into_iter().map(QuestionId).collect())])
    }

    #[test]
    fn unique_triplet() {
        let c = small();
        let l = assign_labels(&c, LabelConfig::default());
        let mut pools = pool_of([1, 2, 9]);
        pools.insert(TopicId(2), vec![]);
        let set = build_training_sets(&c, &l, &pools, TrainingMode::Triplets, &TrainingSetConfig::default());
        let TrainingSet::Triplets { entries, skipped } = set else {
            panic!()
        };
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].members(), [QuestionId(1), QuestionId(2), QuestionId(9)]);
        assert_eq!(skipped, vec![FacetId(20)]);
    }

    #[test]
    fn exhaustive_counts() {
        let c = grid_corpus();
        let l = assign_labels(&c, LabelConfig::default());
        let pools = pool_of(1..=9);
        let cfg = TrainingSetConfig { cap: None, seed: 1 };
        let tri = build_training_sets(&c, &l, &pools, TrainingMode::Triplets, &cfg);
        assert_eq!(tri.len(), 2 * 3 * 4);
        let pairs = build_training_sets(&c, &l, &pools, TrainingMode::Pairs, &cfg);
        assert_eq!(pairs.len(), (2 + 3) * 4);
        if let TrainingSet::Triplets { entries, .. } = tri {
            for e in entries {
                assert_eq!(l.grade(e.facet_id, e.target), Grade::Two);
                assert_eq!(l.grade(e.facet_id, e.related), Grade::One);
                assert_eq!(l.grade(e.facet_id, e.off_topic), Grade::Zero);
            }
        }
    }

    #[test]
    fn cap_subsamples_deterministically() {
        let c = grid_corpus();
        let l = assign_labels(&c, LabelConfig::default());
        let pools = pool_of(1..=9);
        let cfg = TrainingSetConfig { cap: Some(5), seed: 7 };
        let a = build_training_sets(&c, &l, &pools, TrainingMode::Triplets, &cfg);
        let b = build_training_sets(&c, &l, &pools, TrainingMode::Triplets, &cfg);
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
        let other = build_training_sets(
            &c,
            &l,
            &pools,
            TrainingMode::Triplets,
            &TrainingSetConfig { seed: 8, ..cfg },
        );
        assert_eq!(other.len(), 5);
    }

    #[test]
    fn prefixes_skip_triplet_members() {
        let c = grid_corpus();
        let t = TripletEntry {
            topic_id: TopicId(1),
            facet_id: FacetId(10),
            target: QuestionId(1),
            related: QuestionId(4),
            off_topic: QuestionId(7),
        };
        let pool: Vec<QuestionId> = (1..=9).map(QuestionId).collect();
        let h = history_prefixes(&c, &pool, &t, 4);
        assert_eq!(h, vec![vec![], vec![QuestionId(3)], vec![QuestionId(3), QuestionId(5)]]);
        assert_eq!(history_prefixes(&c, &pool, &t, 0), vec![Vec::<QuestionId>::new()]);
    }
}
