//! Tokenization, inverted indexes, smoothed language models and
//! query-likelihood ranking of questions and documents.

mod index;
mod lm;
mod pool;
mod tokenize;

use serde::{Deserialize, Serialize};

pub use index::{build_index, BackgroundModel, CollectionStats, InvertedIndex};
pub use lm::{
    conversation_query_model, ql_score, retrieve_documents, weighted_log_likelihood, LanguageModel, Smoothing,
    OOV_FLOOR,
};
pub use pool::{rank_questions_ql, CandidatePool};
pub use tokenize::{tokenize, tokenize_with, Stopwords};

use crate::error::Result;

/// A line of the documents file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

pub fn load_documents(path: impl AsRef<std::path::Path>) -> Result<Vec<Document>> {
    crate::corpus::read_jsonl(path.as_ref())
}

/// Index over every question of the corpus, used for candidate pools and
/// as the background collection for negative feedback.
pub fn index_questions(corpus: &crate::corpus::Corpus) -> Result<InvertedIndex<crate::corpus::QuestionId>> {
    build_index(corpus.questions().map(|q| (q.id, q.text.as_str())))
}

/// QL candidate pools of size `n` for every topic.
pub fn question_pools(
    corpus: &crate::corpus::Corpus,
    index: &InvertedIndex<crate::corpus::QuestionId>,
    smoothing: Smoothing,
    n: usize,
) -> Result<std::collections::BTreeMap<crate::corpus::TopicId, CandidatePool>> {
    corpus
        .topics()
        .map(|t| Ok((t.id, rank_questions_ql(t.id, &t.text, index, smoothing, n)?)))
        .collect()
}

/// Index over documents keyed by their string id.
pub fn index_documents(docs: &[Document]) -> Result<InvertedIndex<String>> {
    build_index(docs.iter().map(|d| (d.id.clone(), d.text.as_str())))
}
