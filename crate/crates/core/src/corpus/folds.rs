use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, TopicId};

pub const NUM_FOLDS: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Validation,
    Test,
}

/// One of the five fold rotations: fold `r` tests, fold `r + 1` validates,
/// the other three train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rotation(u8);

impl Rotation {
    pub fn new(r: u8) -> Option<Self> {
        (r < NUM_FOLDS).then_some(Self(r))
    }

    pub fn all() -> impl Iterator<Item = Rotation> {
        (0..NUM_FOLDS).map(Rotation)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn test_fold(self) -> u8 {
        self.0
    }

    pub fn validation_fold(self) -> u8 {
        (self.0 + 1) % NUM_FOLDS
    }

    pub fn role_of(self, fold: u8) -> Role {
        if fold == self.test_fold() {
            Role::Test
        } else if fold == self.validation_fold() {
            Role::Validation
        } else {
            Role::Train
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    folds: BTreeMap<TopicId, u8>,
}

impl FoldAssignment {
    pub fn new(corpus: &Corpus) -> Self {
        Self::from_topic_ids(corpus.topics().map(|t| t.id))
    }

    pub fn from_topic_ids(ids: impl IntoIterator<Item = TopicId>) -> Self {
        Self {
            folds: ids.into_iter().map(|id| (id, Self::fold_of(id))).collect(),
        }
    }

    pub fn fold_of(topic: TopicId) -> u8 {
        (topic.0 % NUM_FOLDS as u32) as u8
    }

    pub fn fold(&self, topic: TopicId) -> Option<u8> {
        self.folds.get(&topic).copied()
    }

    pub fn role(&self, topic: TopicId, rotation: Rotation) -> Option<Role> {
        self.fold(topic).map(|f| rotation.role_of(f))
    }

    pub fn topics_with_role(&self, rotation: Rotation, role: Role) -> Vec<TopicId> {
        self.folds
            .iter()
            .filter(|(_, f)| rotation.role_of(**f) == role)
            .map(|(t, _)| *t)
            .collect()
    }

    /// Number of topics per fold, indexed by fold.
    pub fn fold_sizes(&self) -> [usize; NUM_FOLDS as usize] {
        let mut sizes = [0; NUM_FOLDS as usize];
        for f in self.folds.values() {
            sizes[*f as usize] += 1;
        }
        sizes
    }
}

/// Fold assignment of a corpus by topic id modulo five.
pub fn make_folds(corpus: &Corpus) -> FoldAssignment {
    FoldAssignment::new(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulo_assignment() {
        assert_eq!(FoldAssignment::fold_of(TopicId(7)), 2);
        assert_eq!(FoldAssignment::fold_of(TopicId(0)), 0);
    }

    #[test]
    fn residue_histogram_matches_direct_count() {
        let ids: Vec<u32> = (1..=198).collect();
        let folds = FoldAssignment::from_topic_ids(ids.iter().map(|i| TopicId(*i)));
        let mut expected = [0usize; 5];
        for id in &ids {
            let mut r = *id;
            while r >= 5 {
                r -= 5;
            }
            expected[r as usize] += 1;
        }
        assert_eq!(folds.fold_sizes(), expected);
        assert_eq!(folds, FoldAssignment::from_topic_ids(ids.iter().map(|i| TopicId(*i))));
    }

    #[test]
    fn rotation_roles_partition_folds() {
        for r in Rotation::all() {
            let roles: Vec<Role> = (0..NUM_FOLDS).map(|f| r.role_of(f)).collect();
            assert_eq!(roles.iter().filter(|x| **x == Role::Test).count(), 1);
            assert_eq!(roles.iter().filter(|x| **x == Role::Validation).count(), 1);
            assert_eq!(roles.iter().filter(|x| **x == Role::Train).count(), 3);
            assert_eq!(r.validation_fold(), (r.test_fold() + 1) % 5);
        }
        assert!(Rotation::new(5).is_none());
    }

    #[test]
    fn five_topics_one_test_topic_each() {
        let folds = FoldAssignment::from_topic_ids((0..5).map(TopicId));
        for r in Rotation::all() {
            assert_eq!(folds.topics_with_role(r, Role::Test), vec![TopicId(r.index() as u32)]);
        }
    }
}
