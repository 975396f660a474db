use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// λ·rel(q) − (1 − λ)·max_{q' ∈ asked} sim(q', q); the max term is 0 for an
/// empty `asked`.
pub fn mmr_score<K: Copy>(
    candidate: K,
    asked: &[K],
    lambda: f64,
    relevance: impl Fn(K) -> f64,
    similarity: impl Fn(K, K) -> f64,
) -> f64 {
    let redundancy = asked
        .iter()
        .map(|a| similarity(*a, candidate))
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))))
        .unwrap_or(0.0);
    lambda * relevance(candidate) - (1.0 - lambda) * redundancy
}

/// Maximal-marginal-relevance choice over `pool ∖ asked`, ties to the lowest
/// id. `relevance(q)` is f(t, q); `similarity(a, q)` is f(a, q).
pub fn mmr_select<K: Copy + Ord>(
    pool: &[K],
    asked: &[K],
    lambda: f64,
    relevance: impl Fn(K) -> f64,
    similarity: impl Fn(K, K) -> f64,
) -> Result<K> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Invalid(format!("MMR lambda {lambda} outside [0, 1]")));
    }
    pool.iter()
        .copied()
        .filter(|q| !asked.contains(q))
        .map(|q| (q, mmr_score(q, asked, lambda, &relevance, &similarity)))
        .min_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)))
        .map(|(q, _)| q)
        .ok_or(Error::Exhausted)
}

/// Cosine of raw term-frequency vectors, in [0, 1].
pub fn lexical_cosine<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    fn tf<S: AsRef<str>>(xs: &[S]) -> BTreeMap<&str, f64> {
        let mut m: BTreeMap<&str, f64> = BTreeMap::new();
        for x in xs {
            *m.entry(x.as_ref()).or_default() += 1.0;
        }
        m
    }
    let (ta, tb) = (tf(a), tf(b));
    let dot: f64 = ta.iter().map(|(w, x)| x * tb.get(w).unwrap_or(&0.0)).sum();
    let na = ta.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = tb.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).min(1.0)
    }
}
