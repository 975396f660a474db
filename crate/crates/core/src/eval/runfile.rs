use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{FacetId, QuestionId, TopicId};
use crate::error::{Error, Result};

/// Run-file query id: `topic-facet` or `topic-facet-question`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryId {
    pub topic: TopicId,
    pub facet: FacetId,
    pub seed_question: Option<QuestionId>,
}

impl QueryId {
    /// The `topic-facet` key used by qrels.
    pub fn facet_key(&self) -> String {
        format!("{}-{}", self.topic, self.facet)
    }
}

impl std::fmt::Display for QueryId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.topic, self.facet)?;
        if let Some(q) = self.seed_question {
            write!(f, "-{q}")?;
        }
        Ok(())
    }
}

impl FromStr for QueryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("query id {s:?} is not topic-facet[-question]"));
        let parts: Vec<u32> = s
            .split('-')
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match parts[..] {
            [t, f] => Ok(Self {
                topic: TopicId(t),
                facet: FacetId(f),
                seed_question: None,
            }),
            [t, f, q] => Ok(Self {
                topic: TopicId(t),
                facet: FacetId(f),
                seed_question: Some(QuestionId(q)),
            }),
            _ => Err(bad()),
        }
    }
}

/// Ranked item lists per query, in the order queries were added.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub tag: String,
    pub queries: Vec<(String, Vec<(String, f64)>)>,
}

impl Run {
    pub fn new(tag: &str) -> Self {
        Self {
            tag: tag.to_owned(),
            queries: Vec::new(),
        }
    }

    pub fn push(&mut self, qid: &str, items: impl IntoIterator<Item = (String, f64)>) {
        self.queries.push((qid.to_owned(), items.into_iter().collect()));
    }

    pub fn get(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.queries.iter().find(|q| q.0 == qid).map(|q| q.1.as_slice())
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// `qid Q0 item rank score tag` lines, ranks from 1.
    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (qid, items) in &self.queries {
            for (i, (item, score)) in items.iter().enumerate() {
                writeln!(out, "{qid} Q0 {item} {} {score} {}", i + 1, self.tag).expect("write to string");
            }
        }
        out
    }

    /// Parses TREC lines; items are ordered by rank within each query.
    /// Queries with no lines cannot be represented and are absent.
    pub fn from_trec(text: &str, path: &str) -> Result<Self> {
        let mut queries: Vec<(String, Vec<(usize, String, f64)>)> = Vec::new();
        let mut tag = String::new();
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
            if f.len() != 6 {
                return Err(malformed(format!("expected 6 fields, found {}", f.len())));
            }
            let rank: usize = f[3].parse().map_err(|_| malformed(format!("bad rank {:?}", f[3])))?;
            let score: f64 = f[4].parse().map_err(|_| malformed(format!("bad score {:?}", f[4])))?;
            tag = f[5].to_owned();
            match queries.last_mut() {
                Some((q, items)) if q == f[0] => items.push((rank, f[2].to_owned(), score)),
                _ => {
                    if queries.iter().any(|q| q.0 == f[0]) {
                        return Err(malformed(format!("lines of query {} are not contiguous", f[0])));
                    }
                    queries.push((f[0].to_owned(), vec![(rank, f[2].to_owned(), score)]));
                }
            }
        }
        Ok(Self {
            tag,
            queries: queries
                .into_iter()
                .map(|(q, mut items)| {
                    items.sort_by_key(|x| x.0);
                    (q, items.into_iter().map(|(_, d, s)| (d, s)).collect())
                })
                .collect(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_trec(&text, &path.display().to_string())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_trec()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_ids() {
        let q: QueryId = "3-17-40".parse().unwrap();
        assert_eq!(q.seed_question, Some(QuestionId(40)));
        assert_eq!(q.to_string(), "3-17-40");
        assert_eq!(q.facet_key(), "3-17");
        assert!("3".parse::<QueryId>().is_err());
        assert!("a-b".parse::<QueryId>().is_err());
    }

    #[test]
    fn trec_round_trip() {
        let mut run = Run::new("ql");
        run.push("1-2", [("5".to_string(), 2.0), ("7".to_string(), 1.0)]);
        run.push("1-2-5", [("9".to_string(), 0.5)]);
        let text = run.to_trec();
        assert_eq!(text.lines().next().unwrap(), "1-2 Q0 5 1 2 ql");
        assert_eq!(Run::from_trec(&text, "x").unwrap(), run);
        assert!(Run::from_trec("1-2 Q0 5 1", "x").is_err());
    }
}
