use std::collections::BTreeMap;
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::{ql_score, weighted_log_likelihood, BackgroundModel, InvertedIndex, Smoothing, OOV_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeModelConfig {
    /// Weight of the background model in the mixture.
    pub lambda_bg: f64,
    pub max_iters: usize,
    /// Stop once an iteration gains less log-likelihood than this.
    pub tol: f64,
}

impl Default for NegativeModelConfig {
    fn default() -> Self {
        Self {
            lambda_bg: 0.5,
            max_iters: 200,
            tol: 1e-13,
        }
    }
}

/// θ_N: the term distribution that, mixed with the background, best
/// explains the text of the questions the user rejected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeTopicModel {
    probs: BTreeMap<String, f64>,
    lambda_bg: f64,
    retained: Option<usize>,
    log_likelihood: Vec<f64>,
}

impl NegativeTopicModel {
    pub fn prob(&self, term: &str) -> f64 {
        self.probs.get(term).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(w, p)| (w.as_str(), *p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn lambda_bg(&self) -> f64 {
        self.lambda_bg
    }

    pub fn retained(&self) -> Option<usize> {
        self.retained
    }

    /// Log-likelihood after initialization and after every accepted EM step.
    pub fn log_likelihood_trace(&self) -> &[f64] {
        &self.log_likelihood
    }

    /// Keep the `m` most probable terms (ties by term) and renormalize.
    pub fn truncate(&self, m: usize) -> Self {
        let mut terms: Vec<(&String, f64)> = self.probs.iter().map(|(w, p)| (w, *p)).collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms.truncate(m);
        let z: f64 = terms.iter().map(|t| t.1).sum();
        Self {
            probs: terms.into_iter().map(|(w, p)| (w.clone(), p / z)).collect(),
            lambda_bg: self.lambda_bg,
            retained: Some(m),
            log_likelihood: self.log_likelihood.clone(),
        }
    }
}

/// EM for θ_N maximizing Σ_w c(w)·log((1 − λ)·θ_N(w) + λ·P(w|C)).
pub fn estimate_negative_model<S: AsRef<str>>(
    negative_texts: &[Vec<S>],
    background: &impl BackgroundModel,
    config: &NegativeModelConfig,
) -> Result<NegativeTopicModel> {
    let lambda = config.lambda_bg;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Invalid(format!("background weight {lambda} outside (0, 1)")));
    }
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for text in negative_texts {
        for w in text {
            *counts.entry(w.as_ref().to_owned()).or_default() += 1.0;
        }
    }
    if counts.is_empty() {
        return Err(Error::Invalid("no negative feedback text".into()));
    }
    let terms: Vec<(String, f64, f64)> = counts
        .into_iter()
        .map(|(w, c)| {
            let pc = background.background_prob(&w);
            let pc = if pc > 0.0 { pc } else { OOV_FLOOR };
            (w, c, pc)
        })
        .collect();
    let loglik = |theta: &[f64]| -> f64 {
        terms
            .iter()
            .zip(theta)
            .map(|((_, c, pc), t)| c * ((1.0 - lambda) * t + lambda * pc).ln())
            .sum()
    };

    let mut theta = vec![1.0 / terms.len() as f64; terms.len()];
    let mut trace = vec![loglik(&theta)];
    for _ in 0..config.max_iters {
        // E-step: posterior that each occurrence came from θ_N; M-step: renormalize.
        let mut next: Vec<f64> = terms
            .iter()
            .zip(&theta)
            .map(|((_, c, pc), t)| {
                let own = (1.0 - lambda) * t;
                c * own / (own + lambda * pc)
            })
            .collect();
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|t| *t /= z);
        let ll = loglik(&next);
        let prev = *trace.last().expect("trace starts nonempty");
        if ll < prev {
            break;
        }
        theta = next;
        trace.push(ll);
        if ll - prev < config.tol {
            break;
        }
    }
    Ok(NegativeTopicModel {
        probs: terms.into_iter().zip(theta).map(|((w, _, _), t)| (w, t)).collect(),
        lambda_bg: lambda,
        retained: None,
        log_likelihood: trace,
    })
}

/// α·QL(topic | candidate) − (1 − α)·Σ_w θ_N(w)·log P_smoothed(w | candidate).
/// Candidates resembling the rejected questions are pushed down.
pub fn singleneg_score<K: Ord + Clone + Display, S: AsRef<str>>(
    candidate: &K,
    topic_tokens: &[S],
    negative: &NegativeTopicModel,
    alpha: f64,
    index: &InvertedIndex<K>,
    smoothing: Smoothing,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("query weight {alpha} outside [0, 1]")));
    }
    let relevance = ql_score(topic_tokens, candidate, index, smoothing)?;
    if alpha == 1.0 {
        return Ok(relevance);
    }
    let penalty = weighted_log_likelihood(negative.iter(), candidate, index, smoothing)?;
    Ok(alpha * relevance - (1.0 - alpha) * penalty)
}
