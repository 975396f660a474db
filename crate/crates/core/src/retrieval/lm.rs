use std::collections::BTreeMap;
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use super::index::{BackgroundModel, InvertedIndex};
use super::tokenize;
use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::num::by_score_desc;

/// Probability assigned to a query term absent from the whole collection.
pub const OOV_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Smoothing {
    /// (tf + mu * P(w|C)) / (len + mu)
    Dirichlet { mu: f64 },
    /// (1 - lambda) * tf / len + lambda * P(w|C)
    JelinekMercer { lambda: f64 },
}

impl Smoothing {
    pub fn dirichlet(mu: f64) -> Self {
        Smoothing::Dirichlet { mu }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Smoothing::Dirichlet { mu } => mu > 0.0 && mu.is_finite(),
            Smoothing::JelinekMercer { lambda } => lambda > 0.0 && lambda <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("smoothing parameter out of range: {self:?}")))
        }
    }

    pub fn prob(&self, tf: u32, len: u64, p_collection: f64) -> f64 {
        match *self {
            Smoothing::Dirichlet { mu } => (tf as f64 + mu * p_collection) / (len as f64 + mu),
            Smoothing::JelinekMercer { lambda } => {
                let ml = if len == 0 { 0.0 } else { tf as f64 / len as f64 };
                (1.0 - lambda) * ml + lambda * p_collection
            }
        }
    }

    fn log_prob(&self, tf: u32, len: u64, p_collection: f64) -> f64 {
        if p_collection == 0.0 && tf == 0 {
            return OOV_FLOOR.ln();
        }
        self.prob(tf, len, p_collection).ln()
    }
}

/// Term distribution, optionally tagged with the smoothing that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageModel {
    probs: BTreeMap<String, f64>,
    smoothing: Option<Smoothing>,
}

impl LanguageModel {
    pub fn from_probs(probs: BTreeMap<String, f64>) -> Self {
        Self { probs, smoothing: None }
    }

    /// Maximum-likelihood model of a token sequence. Empty input gives an
    /// empty model.
    pub fn max_likelihood<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut probs: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *probs.entry(t.as_ref().to_owned()).or_default() += 1.0;
        }
        let n = tokens.len() as f64;
        probs.values_mut().for_each(|p| *p /= n);
        Self::from_probs(probs)
    }

    /// Smoothed model of one indexed item over the collection vocabulary.
    pub fn of_item<K: Ord + Clone + Display>(index: &InvertedIndex<K>, key: &K, smoothing: Smoothing) -> Result<Self> {
        let pos = index
            .position(key)
            .ok_or_else(|| Error::Invalid(format!("unknown item {key}")))?;
        let stats = index.stats();
        let len = stats.length(pos);
        let probs = stats
            .vocabulary()
            .map(|w| {
                let p = smoothing.prob(index.term_frequency(pos, w), len, stats.background_prob(w));
                (w.to_owned(), p)
            })
            .collect();
        Ok(Self {
            probs,
            smoothing: Some(smoothing),
        })
    }

    /// `weight * a + (1 - weight) * b`.
    pub fn mix(a: &Self, weight: f64, b: &Self) -> Self {
        let mut probs: BTreeMap<String, f64> = BTreeMap::new();
        for (w, p) in &a.probs {
            *probs.entry(w.clone()).or_default() += weight * p;
        }
        for (w, p) in &b.probs {
            *probs.entry(w.clone()).or_default() += (1.0 - weight) * p;
        }
        probs.retain(|_, p| *p > 0.0);
        Self::from_probs(probs)
    }

    pub fn prob(&self, term: &str) -> f64 {
        self.probs.get(term).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(w, p)| (w.as_str(), *p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn smoothing(&self) -> Option<Smoothing> {
        self.smoothing
    }
}

impl BackgroundModel for LanguageModel {
    fn background_prob(&self, term: &str) -> f64 {
        self.prob(term)
    }
}

/// Σ_w c(w, query) · log P_smoothed(w | item).
pub fn ql_score<K: Ord + Clone + Display, S: AsRef<str>>(
    query: &[S],
    key: &K,
    index: &InvertedIndex<K>,
    smoothing: Smoothing,
) -> Result<f64> {
    smoothing.validate()?;
    let pos = index
        .position(key)
        .ok_or_else(|| Error::Invalid(format!("unknown item {key}")))?;
    let stats = index.stats();
    let len = stats.length(pos);
    Ok(query
        .iter()
        .map(|w| {
            let w = w.as_ref();
            smoothing.log_prob(index.term_frequency(pos, w), len, stats.background_prob(w))
        })
        .sum())
}

/// Σ_w weight(w) · log P_smoothed(w | item) for a single item.
pub fn weighted_log_likelihood<'a, K: Ord + Clone + Display>(
    weights: impl IntoIterator<Item = (&'a str, f64)>,
    key: &K,
    index: &InvertedIndex<K>,
    smoothing: Smoothing,
) -> Result<f64> {
    smoothing.validate()?;
    let pos = index
        .position(key)
        .ok_or_else(|| Error::Invalid(format!("unknown item {key}")))?;
    let stats = index.stats();
    let len = stats.length(pos);
    Ok(weights
        .into_iter()
        .map(|(w, a)| a * smoothing.log_prob(index.term_frequency(pos, w), len, stats.background_prob(w)))
        .sum())
}

/// Σ_w weight(w) · log P_smoothed(w | item) for every item, touching only
/// the postings of the weighted terms.
pub(crate) fn score_all<K: Ord + Clone + Display>(
    weights: &[(String, f64)],
    index: &InvertedIndex<K>,
    smoothing: Smoothing,
) -> Vec<f64> {
    let stats = index.stats();
    let n = index.len();
    let terms: Vec<(&str, f64, f64)> = weights
        .iter()
        .map(|(w, a)| (w.as_str(), *a, stats.background_prob(w)))
        .collect();
    // contribution of every term as if absent from the item
    let mut scores: Vec<f64> = (0..n)
        .map(|pos| {
            let len = stats.length(pos);
            terms.iter().map(|(_, a, pc)| a * smoothing.log_prob(0, len, *pc)).sum()
        })
        .collect();
    for (w, a, pc) in &terms {
        for (pos, tf) in index.postings(w) {
            let len = stats.length(*pos);
            scores[*pos] += a * (smoothing.log_prob(*tf, len, *pc) - smoothing.log_prob(0, len, *pc));
        }
    }
    scores
}

pub(crate) fn query_weights<S: AsRef<str>>(query: &[S]) -> Vec<(String, f64)> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for w in query {
        *counts.entry(w.as_ref().to_owned()).or_default() += 1.0;
    }
    counts.into_iter().collect()
}

/// θ = w·θ_topic + (1 − w)·θ_history, where θ_history is the ML model of the
/// asked questions concatenated with their yes/no answers. Empty history
/// yields θ_topic for any w.
pub fn conversation_query_model<S: AsRef<str>>(
    topic_text: &str,
    history: &[(S, Polarity)],
    weight: f64,
) -> Result<LanguageModel> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::Invalid(format!("query weight {weight} outside [0, 1]")));
    }
    let topic = LanguageModel::max_likelihood(&tokenize(topic_text));
    if history.is_empty() {
        return Ok(topic);
    }
    let mut tokens = Vec::new();
    for (question, answer) in history {
        tokens.extend(tokenize(question.as_ref()));
        tokens.push(answer.surface_text().to_owned());
    }
    let hist = LanguageModel::max_likelihood(&tokens);
    if weight == 1.0 {
        return Ok(topic);
    }
    Ok(LanguageModel::mix(&topic, weight, &hist))
}

/// Rank documents by negative cross-entropy Σ_w θ(w)·log P_smoothed(w|d),
/// returning the top `k` (ties by ascending id).
pub fn retrieve_documents<K: Ord + Clone + Display>(
    model: &LanguageModel,
    index: &InvertedIndex<K>,
    smoothing: Smoothing,
    k: usize,
) -> Result<Vec<(K, f64)>> {
    smoothing.validate()?;
    if model.is_empty() {
        return Err(Error::Invalid("empty query model".into()));
    }
    let weights: Vec<(String, f64)> = model.iter().map(|(w, p)| (w.to_owned(), p)).collect();
    let scores = score_all(&weights, index, smoothing);
    Ok(top_k(index, &scores, k))
}

pub(crate) fn top_k<K: Ord + Clone + Display>(index: &InvertedIndex<K>, scores: &[f64], k: usize) -> Vec<(K, f64)> {
    let mut ranked: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    // positions follow key order, so position order is the id tie-break
    ranked.sort_by(|a, b| by_score_desc((&a.0, a.1), (&b.0, b.1)));
    ranked.truncate(k);
    ranked.into_iter().map(|(pos, s)| (index.key(pos).clone(), s)).collect()
}
