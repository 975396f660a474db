//! Deterministic toy corpora with a planted facet structure, for demos and
//! end-to-end tests.
//!
//! Every facet owns a cluster of questions sharing a cluster token; the
//! facet answers "yes" to its own cluster and "no" to every other cluster of
//! the topic. Earlier clusters repeat the topic words more often, so a static
//! relevance ranking asks all questions of one cluster before moving on.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::{
    AnswerRecord, Corpus, Facet, FacetId, FacetType, Polarity, Question, QuestionId, Topic, TopicId, TopicType,
};
use crate::error::{Error, Result};
use crate::retrieval::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub topics: u32,
    pub facets_per_topic: u32,
    pub questions_per_facet: u32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            topics: 10,
            facets_per_topic: 4,
            questions_per_facet: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: Corpus,
    pub documents: Vec<Document>,
    /// Qrels in `topic-facet 0 doc grade` lines.
    pub qrels: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticPaths {
    pub topics: PathBuf,
    pub facets: PathBuf,
    pub questions: PathBuf,
    pub answers: PathBuf,
    pub documents: PathBuf,
    pub qrels: PathBuf,
}

pub fn cluster_token(topic: u32, facet_index: u32) -> String {
    format!("k{topic}n{facet_index}")
}

pub fn synthetic(spec: SyntheticSpec) -> Result<SyntheticData> {
    let SyntheticSpec {
        topics: nt,
        facets_per_topic: nf,
        questions_per_facet: nq,
    } = spec;
    if nt == 0 || nf == 0 || nq == 0 {
        return Err(Error::Invalid(
            "synthetic corpus needs at least one topic, facet and question".into(),
        ));
    }
    let mut topics = Vec::new();
    let mut facets = Vec::new();
    let mut questions = Vec::new();
    let mut answers = Vec::new();
    let mut documents = Vec::new();
    let mut qrels = String::new();
    for t in 0..nt {
        let words = format!("w{t} v{t}");
        topics.push(Topic {
            id: TopicId(t),
            text: words.clone(),
            topic_type: if t % 3 == 2 {
                TopicType::Ambiguous
            } else {
                TopicType::Faceted
            },
        });
        for j in 0..nf {
            let fid = t * nf + j;
            facets.push(Facet {
                id: FacetId(fid),
                topic_id: TopicId(t),
                description: format!("about {}", cluster_token(t, j)),
                facet_type: if j % 2 == 0 {
                    FacetType::Informational
                } else {
                    FacetType::Navigational
                },
            });
            for m in 0..nq {
                let mut text = vec![words.as_str(); (nf - j) as usize].join(" ");
                write!(text, " {} f{m}", cluster_token(t, j)).expect("write to string");
                questions.push(Question {
                    id: QuestionId((t * nf + j) * nq + m),
                    topic_id: TopicId(t),
                    text,
                });
            }
            for (i, grade) in [4, 2, 1].into_iter().enumerate() {
                let id = format!("d{t}x{j}x{i}");
                documents.push(Document {
                    id: id.clone(),
                    text: format!("w{t} {} page {i}", cluster_token(t, j)),
                });
                writeln!(qrels, "{t}-{fid} 0 {id} {grade}").expect("write to string");
            }
        }
        for f in 0..nf {
            let fid = t * nf + f;
            for j in 0..nf {
                for m in 0..nq {
                    let polarity = if j == f { Polarity::Positive } else { Polarity::Negative };
                    answers.push(AnswerRecord::new(
                        FacetId(fid),
                        QuestionId((t * nf + j) * nq + m),
                        polarity,
                    ));
                }
            }
        }
    }
    Ok(SyntheticData {
        corpus: Corpus::from_parts(topics, facets, questions, answers)?,
        documents,
        qrels,
    })
}

fn write_lines<T: Serialize>(path: &Path, items: impl Iterator<Item = T>) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

impl SyntheticData {
    /// Writes the four corpus files, the documents and the qrels into `dir`.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<SyntheticPaths> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = SyntheticPaths {
            topics: dir.join("topics.jsonl"),
            facets: dir.join("facets.jsonl"),
            questions: dir.join("questions.jsonl"),
            answers: dir.join("answers.jsonl"),
            documents: dir.join("documents.jsonl"),
            qrels: dir.join("qrels.txt"),
        };
        write_lines(&p.topics, self.corpus.topics())?;
        write_lines(&p.facets, self.corpus.facets())?;
        write_lines(&p.questions, self.corpus.questions())?;
        write_lines(
            &p.answers,
            self.corpus.answers().map(
                |a| serde_json::json!({"facet_id": a.facet_id, "question_id": a.question_id, "polarity": a.polarity}),
            ),
        )?;
        write_lines(&p.documents, self.documents.iter())?;
        std::fs::write(&p.qrels, &self.qrels).map_err(|e| Error::io(&p.qrels, e))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assign_labels, expand_conversations, load_corpus, Grade, LabelConfig};

    #[test]
    fn shape_and_labels() {
        let d = synthetic(SyntheticSpec::default()).unwrap();
        let c = d.corpus.counts();
        assert_eq!((c.topics, c.facets, c.questions), (10, 40, 120));
        let labels = assign_labels(&d.corpus, LabelConfig::default());
        assert_eq!(labels.count(Grade::Two), 40 * 3);
        assert!(labels.report().is_clean());
        // one zero-turn seed plus 9 rejected questions per facet
        assert_eq!(expand_conversations(&d.corpus, &labels).len(), 40 * 10);
    }

    #[test]
    fn files_reload() {
        let dir = tempfile::tempdir().unwrap();
        let d = synthetic(SyntheticSpec {
            topics: 3,
            ..Default::default()
        })
        .unwrap();
        let p = d.write_files(dir.path()).unwrap();
        let c = load_corpus(&p.topics, &p.facets, &p.questions, &p.answers).unwrap();
        assert_eq!(c, d.corpus);
    }
}
