//! Pluggable text-pair encoders, the initial and marginal-relevance scorers,
//! their losses, the optimizer, and training.

mod adam;
mod data;
mod encoder;
mod loss;
mod mlp;
mod model;
mod precomputed;
mod scorer;
mod train;

pub use adam::{Adam, AdamConfig};
pub use data::{mmr_examples, pair_examples, triplet_examples, FeatureMemo};
pub use encoder::{text_hash, Encoder, EncoderSpec, LexicalEncoder, PairEncoder, LEXICAL_FEATURES};
pub use loss::{loss_listwise, loss_pairwise, sigmoid, softmax, weighted_cross_entropy};
pub use mlp::{Activation, Dense, ForwardTrace, Mlp};
pub use model::{ModelFile, ModelKind, MODEL_FORMAT, MODEL_VERSION};
pub use precomputed::PrecomputedTable;
pub use scorer::{gradients, loss_mmr_history, Example, InitScorer, MmrCandidate, MmrScorer, Network, HIDDEN_GRID};
pub use train::{train, LossKind, LossTrace, NetworkShape, TrainConfig, Trained};
