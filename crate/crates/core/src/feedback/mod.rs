//! Non-neural use of negative feedback: a single negative topic model
//! estimated by EM against the background collection, and the heuristic
//! maximal-marginal-relevance selector.

mod mmr;
mod negative;

pub use mmr::{lexical_cosine, mmr_score, mmr_select};
pub use negative::{estimate_negative_model, singleneg_score, NegativeModelConfig, NegativeTopicModel};
