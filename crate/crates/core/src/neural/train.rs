use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::mlp::Activation;
use super::scorer::{Example, InitScorer, MmrScorer, Network};
use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// (relevant, off-topic) pairs with labels (1, 0).
    Pairwise,
    /// (target, related, off-topic) triplets with labels (2, 1, 0).
    Listwise,
    /// Triplets scored under each history prefix.
    MmrHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss_kind: LossKind,
    /// Parameters start uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl TrainConfig {
    pub fn new(loss_kind: LossKind, seed: u64) -> Self {
        let adam = AdamConfig::default();
        Self {
            learning_rate: adam.learning_rate,
            epochs: 10,
            seed,
            loss_kind,
            init_range: 0.05,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.epochs == 0 {
            return Err(Error::Invalid("learning rate and epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Layer layout of a scorer before its parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "network", rename_all = "lowercase")]
pub enum NetworkShape {
    Init {
        input: usize,
        hidden: Option<usize>,
    },
    Mmr {
        input: usize,
        d: usize,
        mlp1_hidden: Option<usize>,
        mlp2_hidden: Option<usize>,
        #[serde(default)]
        mlp1_output: Activation,
    },
}

impl NetworkShape {
    /// Parameters drawn uniformly from `[-range, range]` with a seeded stream.
    pub fn initialize<T: Scalar>(&self, seed: u64, range: f64) -> Result<Network<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match *self {
            NetworkShape::Init { input, hidden } => {
                let s = InitScorer::<T>::new(input, hidden)?;
                Network::Init(InitScorer {
                    mlp0: s.mlp0.randomized(&mut rng, range),
                })
            }
            NetworkShape::Mmr {
                input,
                d,
                mlp1_hidden,
                mlp2_hidden,
                mlp1_output,
            } => {
                let s = MmrScorer::<T>::new(input, d, mlp1_hidden, mlp2_hidden)?;
                Network::Mmr(MmrScorer {
                    mlp1: s.mlp1.with_output_activation(mlp1_output).randomized(&mut rng, range),
                    mlp2: s.mlp2.randomized(&mut rng, range),
                })
            }
        })
    }
}

/// Mean per-example loss before training and after each epoch's updates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub initial: f64,
    pub epochs: Vec<f64>,
}

impl LossTrace {
    pub fn last(&self) -> f64 {
        self.epochs.last().copied().unwrap_or(self.initial)
    }
}

#[derive(Debug, Clone)]
pub struct Trained<T> {
    pub network: Network<T>,
    pub trace: LossTrace,
}

fn mean_loss<T: Scalar>(network: &Network<T>, examples: &[Example<T>]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ex in examples {
        total += network.loss(ex)?.as_f64();
    }
    Ok(total / examples.len() as f64)
}

/// One Adam step per example, examples shuffled each epoch from `config.seed`.
/// A non-finite loss aborts with the trace so far.
pub fn train<T: Scalar>(config: &TrainConfig, examples: &[Example<T>], network: Network<T>) -> Result<Trained<T>> {
    config.validate()?;
    network.validate()?;
    let mut network = network;
    let mut trace = LossTrace {
        initial: mean_loss(&network, examples)?,
        epochs: Vec::with_capacity(config.epochs),
    };
    let mut params = network.flat();
    let mut adam = Adam::new(params.len(), config.adam());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let step = network.loss_and_grad(&examples[i]);
            let (loss, grad) = match step {
                Ok(v) => v,
                Err(e) if e.is_numeric() => {
                    log::error!("epoch {epoch}: {e}");
                    return Err(Error::Diverged {
                        epoch,
                        loss: f64::NAN,
                        trace: trace.epochs,
                    });
                }
                Err(e) => return Err(e),
            };
            let loss = loss.as_f64();
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    loss,
                    trace: trace.epochs,
                });
            }
            total += loss;
            adam.step(&mut params, &grad);
            network.set_flat(&params);
        }
        let mean = if examples.is_empty() {
            0.0
        } else {
            total / examples.len() as f64
        };
        log::debug!("epoch {epoch}: mean loss {mean:.6}");
        trace.epochs.push(mean);
    }
    Ok(Trained { network, trace })
}
