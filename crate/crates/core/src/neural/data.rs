//! Turning pair/triplet entries into encoded training examples.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use super::encoder::PairEncoder;
use super::scorer::{Example, MmrCandidate};
use crate::corpus::{history_prefixes, Corpus, PairEntry, QuestionId, TopicId, TripletEntry};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Memoized pair encodings; each (A, B) text pair is encoded once.
pub struct FeatureMemo<'e, E> {
    encoder: &'e E,
    cache: RefCell<HashMap<(String, String), Vec<f64>>>,
}

impl<'e, E: PairEncoder> FeatureMemo<'e, E> {
    pub fn new(encoder: &'e E) -> Self {
        Self {
            encoder,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn get<T: Scalar>(&self, a: &str, b: &str) -> Result<Vec<T>> {
        let key = (a.to_owned(), b.to_owned());
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(v.iter().map(|x| T::of(*x)).collect());
        }
        let v = self.encoder.encode(a, b)?;
        let out = v.iter().map(|x| T::of(*x)).collect();
        self.cache.borrow_mut().insert(key, v);
        Ok(out)
    }
}

fn texts<'c>(corpus: &'c Corpus, topic: TopicId, questions: &[QuestionId]) -> Result<(&'c str, Vec<&'c str>)> {
    let t = corpus
        .topic(topic)
        .ok_or_else(|| Error::Invalid(format!("unknown topic {topic}")))?;
    let qs = questions
        .iter()
        .map(|q| {
            corpus
                .question(*q)
                .map(|q| q.text.as_str())
                .ok_or_else(|| Error::Invalid(format!("unknown question {q}")))
        })
        .collect::<Result<_>>()?;
    Ok((t.text.as_str(), qs))
}

/// (q+, q−) with labels (1, 0); pair vectors are encode(question, topic).
pub fn pair_examples<T: Scalar>(
    corpus: &Corpus,
    entries: &[PairEntry],
    encoder: &impl PairEncoder,
) -> Result<Vec<Example<T>>> {
    let memo = FeatureMemo::new(encoder);
    entries
        .iter()
        .map(|e| {
            let (t, qs) = texts(corpus, e.topic_id, &[e.positive, e.negative])?;
            Ok(Example::Init {
                candidates: vec![memo.get(qs[0], t)?, memo.get(qs[1], t)?],
                labels: vec![T::one(), T::zero()],
            })
        })
        .collect()
}

/// (q★, q*, q−) with labels (2, 1, 0) for the initial scorer.
pub fn triplet_examples<T: Scalar>(
    corpus: &Corpus,
    entries: &[TripletEntry],
    encoder: &impl PairEncoder,
) -> Result<Vec<Example<T>>> {
    let memo = FeatureMemo::new(encoder);
    let labels = vec![T::of(2.0), T::one(), T::zero()];
    entries
        .iter()
        .map(|e| {
            let (t, qs) = texts(corpus, e.topic_id, &e.members())?;
            Ok(Example::Init {
                candidates: qs.iter().map(|q| memo.get(q, t)).collect::<Result<_>>()?,
                labels: labels.clone(),
            })
        })
        .collect()
}

/// One example per (triplet, history prefix); histories come from the
/// facet's negatively answered pool questions, at most `max_history` long.
pub fn mmr_examples<T: Scalar>(
    corpus: &Corpus,
    entries: &[TripletEntry],
    pools: &BTreeMap<TopicId, Vec<QuestionId>>,
    encoder: &impl PairEncoder,
    max_history: usize,
) -> Result<Vec<Example<T>>> {
    let memo = FeatureMemo::new(encoder);
    let labels = vec![T::of(2.0), T::one(), T::zero()];
    let mut out = Vec::new();
    for e in entries {
        let pool = pools.get(&e.topic_id).map(Vec::as_slice).unwrap_or(&[]);
        let (t, qs) = texts(corpus, e.topic_id, &e.members())?;
        for h in history_prefixes(corpus, pool, e, max_history) {
            let (_, hist) = texts(corpus, e.topic_id, &h)?;
            let candidates = qs
                .iter()
                .map(|q| {
                    Ok(MmrCandidate {
                        topic_pair: memo.get(t, q)?,
                        history_pairs: hist.iter().map(|h| memo.get(h, q)).collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?;
            out.push(Example::Mmr {
                candidates,
                labels: labels.clone(),
            });
        }
    }
    Ok(out)
}
