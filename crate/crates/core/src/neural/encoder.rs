//! Text-pair encoders producing the feature vector the scorers consume.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::precomputed::PrecomputedTable;
use crate::error::{Error, Result};
use crate::retrieval::tokenize;

/// Number of fixed lexical features before the hashed buckets.
pub const LEXICAL_FEATURES: usize = 8;

/// Maps a text pair (A, B) to a fixed-width real vector.
pub trait PairEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text_a: &str, text_b: &str) -> Result<Vec<f64>>;
}

/// 64-bit FNV-1a of the UTF-8 bytes; the key space of precomputed tables.
pub fn text_hash(text: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(text.as_bytes());
    h.finish()
}

/// Overlap features between two token sequences plus optional hashed
/// token-pair co-occurrence buckets.
///
/// Feature order: unigram Jaccard, tf-idf cosine, share of A's tokens found
/// in B, share of B's tokens found in A, bigram Jaccard (with boundary
/// markers), normalized length difference, idf-weighted overlap, contiguous
/// containment indicator, then `hashed_width` buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalEncoder {
    idf: BTreeMap<String, f64>,
    num_docs: usize,
    hashed_width: usize,
}

impl LexicalEncoder {
    /// Collect document frequencies from `texts`; idf(w) = ln((N + 1)/(df + 1)) + 1.
    pub fn fit<'a>(texts: impl IntoIterator<Item = &'a str>, hashed_width: usize) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n = 0;
        for text in texts {
            n += 1;
            let uniq: BTreeSet<String> = tokenize(text).into_iter().collect();
            for w in uniq {
                *df.entry(w).or_default() += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(w, d)| (w, ((n as f64 + 1.0) / (d as f64 + 1.0)).ln() + 1.0))
            .collect();
        Self {
            idf,
            num_docs: n,
            hashed_width,
        }
    }

    /// Every term weighted 1.
    pub fn uniform(hashed_width: usize) -> Self {
        Self {
            idf: BTreeMap::new(),
            num_docs: 0,
            hashed_width,
        }
    }

    pub fn idf(&self, term: &str) -> f64 {
        match self.idf.get(term) {
            Some(v) => *v,
            // unseen terms get the idf of a document frequency of zero
            None if self.num_docs > 0 => (self.num_docs as f64 + 1.0).ln() + 1.0,
            None => 1.0,
        }
    }

    pub fn hashed_width(&self) -> usize {
        self.hashed_width
    }

    pub fn features(&self, a: &[String], b: &[String]) -> Vec<f64> {
        let set_a: BTreeSet<&str> = a.iter().map(String::as_str).collect();
        let set_b: BTreeSet<&str> = b.iter().map(String::as_str).collect();
        let inter: Vec<&str> = set_a.intersection(&set_b).copied().collect();
        let union: Vec<&str> = set_a.union(&set_b).copied().collect();

        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };

        let jaccard = ratio(inter.len() as f64, union.len() as f64);
        let cosine = self.tfidf_cosine(a, b);
        let a_in_b = ratio(
            a.iter().filter(|t| set_b.contains(t.as_str())).count() as f64,
            a.len() as f64,
        );
        let b_in_a = ratio(
            b.iter().filter(|t| set_a.contains(t.as_str())).count() as f64,
            b.len() as f64,
        );
        let (ba, bb) = (bigrams(a), bigrams(b));
        let bigram_jaccard = ratio(ba.intersection(&bb).count() as f64, ba.union(&bb).count() as f64);
        let len_diff = (a.len() as f64 - b.len() as f64).abs() / (a.len().max(b.len()).max(1) as f64);
        let idf_overlap = ratio(
            inter.iter().map(|w| self.idf(w)).sum(),
            union.iter().map(|w| self.idf(w)).sum(),
        );
        let contained = if !a.is_empty() && !b.is_empty() && (is_contiguous(a, b) || is_contiguous(b, a)) {
            1.0
        } else {
            0.0
        };

        let mut out = vec![
            jaccard,
            cosine,
            a_in_b,
            b_in_a,
            bigram_jaccard,
            len_diff,
            idf_overlap,
            contained,
        ];
        if self.hashed_width > 0 {
            let mut buckets = vec![0.0; self.hashed_width];
            if !set_a.is_empty() && !set_b.is_empty() {
                let unit = 1.0 / (set_a.len() * set_b.len()) as f64;
                for x in &set_a {
                    for y in &set_b {
                        let mut h = FnvHasher::default();
                        h.write(x.as_bytes());
                        h.write(&[0x1f]);
                        h.write(y.as_bytes());
                        buckets[(h.finish() % self.hashed_width as u64) as usize] += unit;
                    }
                }
            }
            out.extend(buckets);
        }
        out
    }

    fn tfidf_cosine(&self, a: &[String], b: &[String]) -> f64 {
        fn vec_of<'a>(enc: &LexicalEncoder, xs: &'a [String]) -> BTreeMap<&'a str, f64> {
            let mut m: BTreeMap<&str, f64> = BTreeMap::new();
            for x in xs {
                *m.entry(x.as_str()).or_default() += 1.0;
            }
            for (w, v) in m.iter_mut() {
                *v *= enc.idf(w);
            }
            m
        }
        let (va, vb) = (vec_of(self, a), vec_of(self, b));
        let dot: f64 = va.iter().map(|(w, x)| x * vb.get(w).unwrap_or(&0.0)).sum();
        let na: f64 = va.values().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = vb.values().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            (dot / (na * nb)).min(1.0)
        }
    }
}

fn bigrams(tokens: &[String]) -> BTreeSet<(&str, &str)> {
    if tokens.is_empty() {
        return BTreeSet::new();
    }
    let padded: Vec<&str> = std::iter::once("\u{2}")
        .chain(tokens.iter().map(String::as_str))
        .chain(std::iter::once("\u{3}"))
        .collect();
    padded.windows(2).map(|w| (w[0], w[1])).collect()
}

/// `needle` occurs as a contiguous run inside `hay`.
fn is_contiguous(needle: &[String], hay: &[String]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

impl PairEncoder for LexicalEncoder {
    fn dim(&self) -> usize {
        LEXICAL_FEATURES + self.hashed_width
    }

    fn encode(&self, text_a: &str, text_b: &str) -> Result<Vec<f64>> {
        Ok(self.features(&tokenize(text_a), &tokenize(text_b)))
    }
}

/// Serializable description of an encoder, stored in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderSpec {
    Lexical(LexicalEncoder),
    Precomputed { path: std::path::PathBuf, dim: usize },
}

impl EncoderSpec {
    pub fn dim(&self) -> usize {
        match self {
            EncoderSpec::Lexical(e) => e.dim(),
            EncoderSpec::Precomputed { dim, .. } => *dim,
        }
    }

    pub fn build(&self) -> Result<Encoder> {
        match self {
            EncoderSpec::Lexical(e) => Ok(Encoder::Lexical(e.clone())),
            EncoderSpec::Precomputed { path, dim } => {
                let table = PrecomputedTable::read(path)?;
                if table.dim() != *dim {
                    return Err(Error::Shape(format!(
                        "precomputed table has dimension {}, model expects {dim}",
                        table.dim()
                    )));
                }
                Ok(Encoder::Precomputed(table))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Encoder {
    Lexical(LexicalEncoder),
    Precomputed(PrecomputedTable),
}

impl PairEncoder for Encoder {
    fn dim(&self) -> usize {
        match self {
            Encoder::Lexical(e) => e.dim(),
            Encoder::Precomputed(t) => t.dim(),
        }
    }

    fn encode(&self, text_a: &str, text_b: &str) -> Result<Vec<f64>> {
        match self {
            Encoder::Lexical(e) => e.encode(text_a, text_b),
            Encoder::Precomputed(t) => t.encode(text_a, text_b),
        }
    }
}
