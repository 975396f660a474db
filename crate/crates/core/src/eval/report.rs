use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::fisher::FisherResult;
use super::groups::{Group, SuccessAt};
use super::metrics::{mrr, ndcg_at, ndcg_with_ideal, GainScheme};
use super::runfile::{QueryId, Run};
use crate::corpus::{LabelTable, QuestionId, TopicId};
use crate::error::{Error, Result};
use crate::retrieval::CandidatePool;

/// Where the NDCG ideal ordering comes from for conversation lists.
#[derive(Debug, Clone, Copy)]
pub enum Ideal<'a> {
    /// The asked list itself.
    AskedList,
    /// Every candidate in the topic's pool plus the asked questions.
    Pool(&'a BTreeMap<TopicId, CandidatePool>),
}

pub const CQ_METRICS: [&str; 5] = ["MRR", "NDCG@3", "NDCG@5", "NDCG@3/multi", "NDCG@5/multi"];

/// Per-query question-task metrics of a run: MRR on grade 2 and NDCG@{3,5}
/// under both gain schemes.
pub fn evaluate_cq_run(
    run: &Run,
    labels: &LabelTable,
    ideal: Ideal,
) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut out = BTreeMap::new();
    for (qid, items) in &run.queries {
        let q: QueryId = qid.parse()?;
        let asked = items
            .iter()
            .map(|(item, _)| {
                item.parse::<u32>()
                    .map(QuestionId)
                    .map_err(|_| Error::Invalid(format!("query {qid}: item {item:?} is not a question id")))
            })
            .collect::<Result<Vec<_>>>()?;
        let grade = |x: QuestionId| labels.grade_in(q.topic, q.facet, x).value();
        let grades: Vec<u8> = asked.iter().map(|x| grade(*x)).collect();
        let ideal_grades: Vec<u8> = match ideal {
            Ideal::AskedList => grades.clone(),
            Ideal::Pool(pools) => {
                let mut ids: Vec<QuestionId> = pools.get(&q.topic).map(|p| p.ids()).unwrap_or_default();
                ids.extend(asked.iter().copied());
                ids.sort_unstable();
                ids.dedup();
                ids.into_iter().map(grade).collect()
            }
        };
        let nd = |k, s| ndcg_with_ideal::<f64>(&grades, &ideal_grades, k, s);
        let values = [
            mrr::<f64>(&grades),
            nd(3, GainScheme::Label2Only),
            nd(5, GainScheme::Label2Only),
            nd(3, GainScheme::Multigrade),
            nd(5, GainScheme::Multigrade),
        ];
        debug_assert!(
            matches!(ideal, Ideal::Pool(_)) || values[1] == ndcg_at::<f64>(&grades, 3, GainScheme::Label2Only)
        );
        out.insert(
            qid.clone(),
            CQ_METRICS.iter().map(|m| m.to_string()).zip(values).collect(),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub against: String,
    pub metric: String,
    pub result: FisherResult,
}

/// Per-query values, their means, breakdowns and significance results of
/// one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub per_query: BTreeMap<String, BTreeMap<String, f64>>,
    pub means: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub breakdowns: BTreeMap<String, Vec<Group>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub success: Vec<SuccessAt>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub significance: Vec<Comparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl MetricsReport {
    pub fn new(name: &str, per_query: BTreeMap<String, BTreeMap<String, f64>>) -> Self {
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        for m in per_query.values() {
            for (k, v) in m {
                *sums.entry(k.clone()).or_default() += v;
            }
        }
        let n = per_query.len().max(1) as f64;
        Self {
            name: name.to_owned(),
            means: sums.into_iter().map(|(k, s)| (k, s / n)).collect(),
            per_query,
            ..Default::default()
        }
    }

    /// Values of one metric keyed by query.
    pub fn metric(&self, metric: &str) -> BTreeMap<String, f64> {
        self.per_query
            .iter()
            .filter_map(|(q, m)| m.get(metric).map(|v| (q.clone(), *v)))
            .collect()
    }

    /// Paired values of `metric` for queries present in both reports.
    pub fn paired(&self, other: &Self, metric: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let a = self.metric(metric);
        let b = other.metric(metric);
        if a.keys().ne(b.keys()) {
            return Err(Error::Shape(format!(
                "reports {} and {} cover different queries",
                self.name, other.name
            )));
        }
        Ok((a.values().copied().collect(), b.values().copied().collect()))
    }
}

/// Tab-separated table, one row per report and one column per metric.
/// A trailing `*` marks a significant difference from the first report.
pub fn summary_tsv(reports: &[MetricsReport], metrics: &[&str]) -> String {
    let mut out = String::from("method");
    for m in metrics {
        write!(out, "\t{m}").expect("write to string");
    }
    out.push('\n');
    for r in reports {
        out.push_str(&r.name);
        for m in metrics {
            let significant = r.significance.iter().any(|c| c.metric == *m && c.result.significant());
            let mark = if significant { "*" } else { "" };
            match r.means.get(*m) {
                Some(v) => write!(out, "\t{v:.4}{mark}"),
                None => write!(out, "\t-"),
            }
            .expect("write to string");
        }
        out.push('\n');
    }
    out
}
