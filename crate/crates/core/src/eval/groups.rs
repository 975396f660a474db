use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::runfile::QueryId;
use crate::corpus::{Corpus, FacetType, TopicType};
use crate::error::{Error, Result};
use crate::simulator::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessAt {
    pub turn: usize,
    pub count: usize,
    pub fraction: f64,
}

/// Conversations confirmed within each turn limit.
pub fn cumulative_success(transcripts: &[Transcript], turns: &[usize]) -> Vec<SuccessAt> {
    let n = transcripts.len();
    turns
        .iter()
        .map(|&turn| {
            let count = transcripts
                .iter()
                .filter(|t| t.confirmed_at().is_some_and(|c| c <= turn))
                .count();
            SuccessAt {
                turn,
                count,
                fraction: if n == 0 { 0.0 } else { count as f64 / n as f64 },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    TopicType,
    FacetType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub queries: usize,
    /// Distinct topics (or facets) behind the queries.
    pub units: usize,
    pub mean: f64,
}

/// Per-group means of per-query values keyed by run qid.
pub fn breakdown(values: &BTreeMap<String, f64>, corpus: &Corpus, key: GroupKey) -> Result<Vec<Group>> {
    let mut groups: BTreeMap<&'static str, (Vec<f64>, BTreeSet<u32>)> = BTreeMap::new();
    for (qid, v) in values {
        let q: QueryId = qid.parse()?;
        let (name, unit) = match key {
            GroupKey::TopicType => {
                let t = corpus.topic(q.topic).ok_or_else(|| Error::Dangling {
                    kind: "topic",
                    id: q.topic.to_string(),
                    context: format!("query {qid}"),
                })?;
                let name = match t.topic_type {
                    TopicType::Faceted => "faceted",
                    TopicType::Ambiguous => "ambiguous",
                };
                (name, q.topic.0)
            }
            GroupKey::FacetType => {
                let f = corpus.facet(q.facet).ok_or_else(|| Error::Dangling {
                    kind: "facet",
                    id: q.facet.to_string(),
                    context: format!("query {qid}"),
                })?;
                let name = match f.facet_type {
                    FacetType::Informational => "informational",
                    FacetType::Navigational => "navigational",
                };
                (name, q.facet.0)
            }
        };
        let g = groups.entry(name).or_default();
        g.0.push(*v);
        g.1.insert(unit);
    }
    Ok(groups
        .into_iter()
        .map(|(name, (vals, units))| Group {
            name: name.to_owned(),
            queries: vals.len(),
            units: units.len(),
            mean: vals.iter().sum::<f64>() / vals.len() as f64,
        })
        .collect())
}
