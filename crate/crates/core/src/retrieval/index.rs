use std::collections::BTreeMap;
use std::fmt::Display;

use super::tokenize;
use crate::error::{Error, Result};

/// Collection-wide term statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollectionStats {
    ctf: BTreeMap<String, u64>,
    total: u64,
    lengths: Vec<u64>,
}

impl CollectionStats {
    pub fn collection_frequency(&self, term: &str) -> u64 {
        self.ctf.get(term).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.ctf.keys().map(String::as_str)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.ctf.len()
    }

    /// Length of the item at dense position `pos`.
    pub fn length(&self, pos: usize) -> u64 {
        self.lengths[pos]
    }

    pub fn num_items(&self) -> usize {
        self.lengths.len()
    }
}

/// Source of P(w|C).
pub trait BackgroundModel {
    fn background_prob(&self, term: &str) -> f64;
}

impl BackgroundModel for CollectionStats {
    fn background_prob(&self, term: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.collection_frequency(term) as f64 / self.total as f64
        }
    }
}

/// Term postings over items identified by `K`. Items are stored in key order
/// so postings are sorted by id.
#[derive(Debug, Clone)]
pub struct InvertedIndex<K> {
    keys: Vec<K>,
    positions: BTreeMap<K, usize>,
    term_freqs: Vec<BTreeMap<String, u32>>,
    postings: BTreeMap<String, Vec<(usize, u32)>>,
    stats: CollectionStats,
}

impl<K: Ord + Clone + Display> InvertedIndex<K> {
    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }

    pub fn position(&self, key: &K) -> Option<usize> {
        self.positions.get(key).copied()
    }

    pub fn key(&self, pos: usize) -> &K {
        &self.keys[pos]
    }

    pub fn term_frequency(&self, pos: usize, term: &str) -> u32 {
        self.term_freqs[pos].get(term).copied().unwrap_or(0)
    }

    pub fn term_freqs(&self, pos: usize) -> &BTreeMap<String, u32> {
        &self.term_freqs[pos]
    }

    /// (position, tf) pairs for `term`, sorted by position.
    pub fn postings(&self, term: &str) -> &[(usize, u32)] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Index `(id, text)` items. Ids must be unique and the list nonempty.
pub fn build_index<'a, K, I>(items: I) -> Result<InvertedIndex<K>>
where
    K: Ord + Clone + Display,
    I: IntoIterator<Item = (K, &'a str)>,
{
    let mut by_key: BTreeMap<K, Vec<String>> = BTreeMap::new();
    for (key, text) in items {
        if by_key.contains_key(&key) {
            return Err(Error::Duplicate {
                kind: "item",
                id: key.to_string(),
            });
        }
        by_key.insert(key, tokenize(text));
    }
    if by_key.is_empty() {
        return Err(Error::Invalid("cannot index an empty item list".into()));
    }

    let mut keys = Vec::with_capacity(by_key.len());
    let mut positions = BTreeMap::new();
    let mut term_freqs = Vec::with_capacity(by_key.len());
    let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
    let mut stats = CollectionStats::default();
    for (pos, (key, tokens)) in by_key.into_iter().enumerate() {
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_default() += 1;
        }
        for (term, n) in &tf {
            postings.entry(term.clone()).or_default().push((pos, *n));
            *stats.ctf.entry(term.clone()).or_default() += *n as u64;
        }
        stats.total += tokens.len() as u64;
        stats.lengths.push(tokens.len() as u64);
        positions.insert(key.clone(), pos);
        keys.push(key);
        term_freqs.push(tf);
    }
    Ok(InvertedIndex {
        keys,
        positions,
        term_freqs,
        postings,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_on_two_items() {
        let idx = build_index([("d1".to_string(), "a a b"), ("d2".to_string(), "b b")]).unwrap();
        let s = idx.stats();
        assert_eq!(s.collection_frequency("a"), 2);
        assert_eq!(s.collection_frequency("b"), 3);
        assert_eq!(s.total_tokens(), 5);
        assert_eq!(idx.postings("b"), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn single_empty_item() {
        let idx = build_index([(1u32, "")]).unwrap();
        assert_eq!(idx.stats().vocabulary_size(), 0);
        assert_eq!(idx.stats().total_tokens(), 0);
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(matches!(
            build_index([(1u32, "a"), (1, "b")]),
            Err(Error::Duplicate { .. })
        ));
        assert!(build_index(Vec::<(u32, &str)>::new()).is_err());
    }

    #[test]
    fn postings_sorted_by_id() {
        let idx = build_index([(5u32, "x"), (2, "x y"), (9, "x")]).unwrap();
        assert_eq!(idx.keys(), &[2, 5, 9]);
        let pos: Vec<usize> = idx.postings("x").iter().map(|p| p.0).collect();
        assert_eq!(pos, vec![0, 1, 2]);
    }

    #[test]
    fn thousand_items_conserve_tokens() {
        let words = ["alpha", "beta", "gamma", "delta", "eps"];
        let texts: Vec<String> = (0..1000u32)
            .map(|i| {
                (0..(i % 13))
                    .map(|j| words[((i * 7 + j * 3) % 5) as usize])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let idx = build_index(texts.iter().enumerate().map(|(i, t)| (i as u32, t.as_str()))).unwrap();
        let recount: usize = texts.iter().map(|t| t.split_whitespace().count()).sum();
        let ctf_sum: u64 = idx
            .stats()
            .vocabulary()
            .map(|w| idx.stats().collection_frequency(w))
            .sum();
        assert_eq!(ctf_sum as usize, recount);
        assert_eq!(idx.stats().total_tokens() as usize, recount);
    }

    proptest! {
        #[test]
        fn conservation(texts in proptest::collection::vec("[a-c ]{0,12}", 1..20)) {
            let idx = build_index(texts.iter().enumerate().map(|(i, t)| (i, t.as_str()))).unwrap();
            let s = idx.stats();
            let sum: u64 = s.vocabulary().map(|w| s.collection_frequency(w)).sum();
            prop_assert_eq!(sum, s.total_tokens());
            let lens: u64 = (0..s.num_items()).map(|p| s.length(p)).sum();
            prop_assert_eq!(lens, s.total_tokens());
        }
    }
}
