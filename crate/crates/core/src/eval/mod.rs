//! Metrics for the question and document tasks, breakdowns, significance
//! testing and cross-validation.

mod crossval;
mod doc;
mod fisher;
mod groups;
mod metrics;
mod report;
mod runfile;

pub use crossval::{crossval_run, mean, CrossValReport, FoldReport};
pub use doc::{conversation_doc_run, doc_metrics, evaluate_doc_run, DocEvaluation, DocMetrics, Qrels};
pub use fisher::{
    fisher_exhaustive, fisher_randomization, fisher_sampled, FisherResult, DEFAULT_ITERATIONS, EXHAUSTIVE_LIMIT,
    SIGNIFICANCE_LEVEL,
};
pub use groups::{breakdown, cumulative_success, Group, GroupKey, SuccessAt};
pub use metrics::{dcg_at, mrr, mrr_by, ndcg_at, ndcg_with_ideal, precision_at_1, GainScheme};
pub use report::{evaluate_cq_run, summary_tsv, Comparison, Ideal, MetricsReport, CQ_METRICS};
pub use runfile::{QueryId, Run};
