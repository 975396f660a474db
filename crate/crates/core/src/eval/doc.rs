use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{dcg_at, mrr_by, precision_at_1, GainScheme};
use super::runfile::{QueryId, Run};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::retrieval::{conversation_query_model, retrieve_documents, InvertedIndex, Smoothing};
use crate::simulator::Transcript;

/// Graded document judgments per `topic-facet` key, grades 0..=4.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels(pub BTreeMap<String, BTreeMap<String, u8>>);

impl Qrels {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut out: BTreeMap<String, BTreeMap<String, u8>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| Error::Malformed {
                path: path.into(),
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(malformed(format!("expected 4 fields, found {}", f.len())));
            }
            let rel: u8 = f[3]
                .parse()
                .ok()
                .filter(|r| *r <= 4)
                .ok_or_else(|| malformed(format!("relevance {:?} outside 0..4", f[3])))?;
            out.entry(f[0].to_owned()).or_default().insert(f[2].to_owned(), rel);
        }
        Ok(Self(out))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&BTreeMap<String, u8>> {
        self.0.get(key)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DocMetrics {
    pub mrr: f64,
    pub p1: f64,
    pub ndcg1: f64,
    pub ndcg5: f64,
    pub ndcg20: f64,
}

impl DocMetrics {
    pub const NAMES: [&'static str; 5] = ["MRR", "P@1", "NDCG@1", "NDCG@5", "NDCG@20"];

    pub fn values(&self) -> [f64; 5] {
        [self.mrr, self.p1, self.ndcg1, self.ndcg5, self.ndcg20]
    }
}

/// Metrics of one ranked document list. Relevance for MRR and P@1 is grade
/// ≥ 1; NDCG uses gains 2^grade − 1 with the ideal over all judged documents.
pub fn doc_metrics(ranked: &[&str], judged: &BTreeMap<String, u8>) -> DocMetrics {
    let grades: Vec<u8> = ranked.iter().map(|d| judged.get(*d).copied().unwrap_or(0)).collect();
    let relevant: Vec<bool> = grades.iter().map(|g| *g >= 1).collect();
    let mut ideal: Vec<u8> = judged.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let ndcg = |k| {
        let idcg: f64 = dcg_at(&ideal, k, GainScheme::Multigrade);
        if idcg > 0.0 {
            dcg_at::<f64>(&grades, k, GainScheme::Multigrade) / idcg
        } else {
            0.0
        }
    };
    DocMetrics {
        mrr: mrr_by(&relevant, |r| r),
        p1: precision_at_1(&relevant),
        ndcg1: ndcg(1),
        ndcg5: ndcg(5),
        ndcg20: ndcg(20),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocEvaluation {
    pub per_query: BTreeMap<String, DocMetrics>,
    /// Queries with no judgments, left out of every mean.
    pub skipped: Vec<String>,
}

impl DocEvaluation {
    pub fn means(&self) -> DocMetrics {
        let n = self.per_query.len().max(1) as f64;
        let mut m = DocMetrics::default();
        for v in self.per_query.values() {
            m.mrr += v.mrr;
            m.p1 += v.p1;
            m.ndcg1 += v.ndcg1;
            m.ndcg5 += v.ndcg5;
            m.ndcg20 += v.ndcg20;
        }
        DocMetrics {
            mrr: m.mrr / n,
            p1: m.p1 / n,
            ndcg1: m.ndcg1 / n,
            ndcg5: m.ndcg5 / n,
            ndcg20: m.ndcg20 / n,
        }
    }
}

/// Scores a document run; run qids may carry a seed question, qrels are
/// looked up by `topic-facet`.
pub fn evaluate_doc_run(run: &Run, qrels: &Qrels) -> Result<DocEvaluation> {
    let mut out = DocEvaluation::default();
    for (qid, items) in &run.queries {
        let key = qid.parse::<QueryId>()?.facet_key();
        match qrels.get(&key).filter(|j| !j.is_empty()) {
            Some(judged) => {
                let ranked: Vec<&str> = items.iter().map(|i| i.0.as_str()).collect();
                out.per_query.insert(qid.clone(), doc_metrics(&ranked, judged));
            }
            None => out.skipped.push(qid.clone()),
        }
    }
    Ok(out)
}

/// Document retrieval after each conversation, with the query model mixing
/// the topic (weight `w`) and the asked questions with their answers.
pub fn conversation_doc_run(
    transcripts: &[Transcript],
    corpus: &Corpus,
    docs: &InvertedIndex<String>,
    smoothing: Smoothing,
    w: f64,
    k: usize,
    tag: &str,
) -> Result<Run> {
    let mut run = Run::new(tag);
    for t in transcripts {
        let topic = corpus.topic(t.topic).ok_or_else(|| Error::Dangling {
            kind: "topic",
            id: t.topic.to_string(),
            context: format!("transcript {}", t.qid),
        })?;
        let history = t
            .turns
            .iter()
            .map(|turn| {
                corpus
                    .question(turn.q)
                    .map(|q| (q.text.as_str(), turn.a))
                    .ok_or_else(|| Error::Dangling {
                        kind: "question",
                        id: turn.q.to_string(),
                        context: format!("transcript {}", t.qid),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = conversation_query_model(&topic.text, &history, w)?;
        run.push(&t.qid, retrieve_documents(&model, docs, smoothing, k)?);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn judged(pairs: &[(&str, u8)]) -> BTreeMap<String, u8> {
        pairs.iter().map(|(d, g)| (d.to_string(), *g)).collect()
    }

    #[test]
    fn top_and_fourth() {
        let j = judged(&[("a", 3), ("b", 0)]);
        assert_eq!(doc_metrics(&["a", "b"], &j).p1, 1.0);
        let j = judged(&[("d", 1)]);
        let m = doc_metrics(&["a", "b", "c", "d"], &j);
        assert_eq!(m.mrr, 0.25);
        assert_eq!(m.p1, 0.0);
    }

    #[test]
    fn five_doc_fixture() {
        let j = judged(&[("d1", 0), ("d2", 4), ("d3", 1), ("d4", 2), ("d9", 3)]);
        let m = doc_metrics(&["d1", "d3", "d2", "d5", "d4"], &j);
        // gains 0, 1, 15, 0, 3 at ranks 1..5; ideal 15, 7, 3, 1, 0
        let d = |r: f64| (r + 1.0).log2();
        let dcg5 = 1.0 / d(2.0) + 15.0 / d(3.0) + 3.0 / d(5.0);
        let idcg5 = 15.0 + 7.0 / d(2.0) + 3.0 / d(3.0) + 1.0 / d(4.0);
        assert_eq!(m.mrr, 0.5);
        assert_eq!(m.p1, 0.0);
        assert_eq!(m.ndcg1, 0.0);
        assert_abs_diff_eq!(m.ndcg5, dcg5 / idcg5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.ndcg20, dcg5 / (idcg5 + 0.0), epsilon = 1e-12);
    }

    #[test]
    fn qrels_and_skips() {
        let q = Qrels::parse("1-2 0 d1 3\n1-2 0 d2 0\n\n", "q").unwrap();
        assert_eq!(q.get("1-2").unwrap().len(), 2);
        assert!(Qrels::parse("1-2 0 d1 7", "q").is_err());
        let mut run = Run::new("t");
        run.push("1-2-5", [("d1".to_string(), 1.0)]);
        run.push("3-4", [("d1".to_string(), 1.0)]);
        let e = evaluate_doc_run(&run, &q).unwrap();
        assert_eq!(e.per_query["1-2-5"].p1, 1.0);
        assert_eq!(e.skipped, vec!["3-4".to_string()]);
    }
}
