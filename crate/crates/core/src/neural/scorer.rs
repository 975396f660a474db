//! The two scorers and their losses.
//!
//! `InitScorer` rates a candidate question against the topic alone.
//! `MmrScorer` projects the (topic, candidate) pair and every
//! (asked question, candidate) pair through one shared network, max-pools
//! the asked-question projections, and rates the concatenation.

use serde::{Deserialize, Serialize};

use super::encoder::PairEncoder;
use super::loss::weighted_cross_entropy;
use super::mlp::{ForwardTrace, Mlp};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Hidden and projection sizes searched during tuning.
pub const HIDDEN_GRID: [usize; 4] = [4, 8, 16, 32];

fn features<T: Scalar>(encoder: &impl PairEncoder, a: &str, b: &str) -> Result<Vec<T>> {
    Ok(encoder.encode(a, b)?.into_iter().map(T::of).collect())
}

fn check_hidden(name: &str, hidden: Option<usize>) -> Result<()> {
    match hidden {
        Some(h) if !HIDDEN_GRID.contains(&h) => {
            Err(Error::Shape(format!("{name} hidden size {h} not in {HIDDEN_GRID:?}")))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitScorer<T> {
    pub mlp0: Mlp<T>,
}

impl<T: Scalar> InitScorer<T> {
    /// One layer (`hidden = None`) or two layers through `hidden` units.
    pub fn new(input: usize, hidden: Option<usize>) -> Result<Self> {
        check_hidden("mlp0", hidden)?;
        Ok(Self {
            mlp0: Mlp::zeros("mlp0", input, hidden.as_slice(), 1),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.mlp0.validate()?;
        if self.mlp0.output_dim() != 1 || self.mlp0.layers.len() > 2 {
            return Err(Error::Shape("mlp0 must map to one output in 1 or 2 layers".into()));
        }
        Ok(())
    }

    pub fn score_features(&self, pair: &[T]) -> Result<T> {
        Ok(self.mlp0.apply(pair)?[0])
    }

    /// s(q, t) = MLP0(encode(q, t)).
    pub fn score(&self, encoder: &impl PairEncoder, question: &str, topic: &str) -> Result<T> {
        self.score_features(&features(encoder, question, topic)?)
    }
}

/// Inputs of one MMR-scored candidate: its pair vector with the topic and
/// with each asked question.
#[derive(Debug, Clone, PartialEq)]
pub struct MmrCandidate<T> {
    pub topic_pair: Vec<T>,
    pub history_pairs: Vec<Vec<T>>,
}

impl<T: Scalar> MmrCandidate<T> {
    pub fn encode<S: AsRef<str>>(
        encoder: &impl PairEncoder,
        question: &str,
        topic: &str,
        history: &[S],
    ) -> Result<Self> {
        Ok(Self {
            topic_pair: features(encoder, topic, question)?,
            history_pairs: history
                .iter()
                .map(|h| features(encoder, h.as_ref(), question))
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmrScorer<T> {
    pub mlp1: Mlp<T>,
    pub mlp2: Mlp<T>,
}

struct MmrForward<T> {
    topic: ForwardTrace<T>,
    history: Vec<ForwardTrace<T>>,
    /// For each pooled coordinate, the history index that won the max.
    argmax: Vec<Option<usize>>,
    head: ForwardTrace<T>,
}

impl<T: Scalar> MmrScorer<T> {
    /// MLP1: input → [hidden] → d (shared); MLP2: 2d → [hidden] → 1.
    pub fn new(input: usize, d: usize, mlp1_hidden: Option<usize>, mlp2_hidden: Option<usize>) -> Result<Self> {
        if !HIDDEN_GRID.contains(&d) {
            return Err(Error::Shape(format!("projection size {d} not in {HIDDEN_GRID:?}")));
        }
        check_hidden("mlp1", mlp1_hidden)?;
        check_hidden("mlp2", mlp2_hidden)?;
        Ok(Self {
            mlp1: Mlp::zeros("mlp1", input, mlp1_hidden.as_slice(), d),
            mlp2: Mlp::zeros("mlp2", 2 * d, mlp2_hidden.as_slice(), 1),
        })
    }

    pub fn projection_dim(&self) -> usize {
        self.mlp1.output_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.mlp1.validate()?;
        self.mlp2.validate()?;
        if self.mlp2.input_dim() != 2 * self.mlp1.output_dim() || self.mlp2.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "mlp2 must map 2×{} inputs to 1 output",
                self.mlp1.output_dim()
            )));
        }
        Ok(())
    }

    fn forward(&self, c: &MmrCandidate<T>) -> Result<MmrForward<T>> {
        let d = self.projection_dim();
        let topic = self.mlp1.forward(&c.topic_pair)?;
        let history: Vec<ForwardTrace<T>> = c
            .history_pairs
            .iter()
            .map(|h| self.mlp1.forward(h))
            .collect::<Result<_>>()?;
        let mut pooled = vec![T::zero(); d];
        let mut argmax = vec![None; d];
        for j in 0..d {
            for (i, h) in history.iter().enumerate() {
                let v = h.output()[j];
                // strict comparison keeps the lowest index on ties
                if argmax[j].is_none() || v > pooled[j] {
                    pooled[j] = v;
                    argmax[j] = Some(i);
                }
            }
        }
        let mut z = topic.output().to_vec();
        z.extend(pooled);
        let head = self.mlp2.forward(&z)?;
        Ok(MmrForward {
            topic,
            history,
            argmax,
            head,
        })
    }

    pub fn score_candidate(&self, c: &MmrCandidate<T>) -> Result<T> {
        Ok(self.forward(c)?.head.output()[0])
    }

    /// MLP2([o(t, q); maxpool_i o(q_i, q)]) with an all-zero pool for an
    /// empty history.
    pub fn score<S: AsRef<str>>(
        &self,
        encoder: &impl PairEncoder,
        question: &str,
        topic: &str,
        history: &[S],
    ) -> Result<T> {
        self.score_candidate(&MmrCandidate::encode(encoder, question, topic, history)?)
    }

    fn backward(&self, fwd: &MmrForward<T>, d_score: T, grad: &mut [T]) {
        let d = self.projection_dim();
        let (g1, g2) = grad.split_at_mut(self.mlp1.num_params());
        let dz = self.mlp2.backward(&fwd.head, &[d_score], g2);
        self.mlp1.backward(&fwd.topic, &dz[..d], g1);
        for (i, trace) in fwd.history.iter().enumerate() {
            let d_out: Vec<T> = (0..d)
                .map(|j| if fwd.argmax[j] == Some(i) { dz[d + j] } else { T::zero() })
                .collect();
            if d_out.iter().any(|v| *v != T::zero()) {
                self.mlp1.backward(trace, &d_out, g1);
            }
        }
    }
}

/// One training term: a list of candidates with their label weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Example<T> {
    /// Pair vectors (question, topic) for the initial scorer.
    Init { candidates: Vec<Vec<T>>, labels: Vec<T> },
    /// Candidates under one conversation history for the MMR scorer.
    Mmr {
        candidates: Vec<MmrCandidate<T>>,
        labels: Vec<T>,
    },
}

impl<T: Scalar> Example<T> {
    pub fn labels(&self) -> &[T] {
        match self {
            Example::Init { labels, .. } | Example::Mmr { labels, .. } => labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "network", rename_all = "lowercase")]
pub enum Network<T> {
    Init(InitScorer<T>),
    Mmr(MmrScorer<T>),
}

impl<T: Scalar> Network<T> {
    pub fn num_params(&self) -> usize {
        match self {
            Network::Init(s) => s.mlp0.num_params(),
            Network::Mmr(s) => s.mlp1.num_params() + s.mlp2.num_params(),
        }
    }

    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        match self {
            Network::Init(s) => s.mlp0.write_flat(&mut out),
            Network::Mmr(s) => {
                s.mlp1.write_flat(&mut out);
                s.mlp2.write_flat(&mut out);
            }
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        match self {
            Network::Init(s) => {
                s.mlp0.read_flat(flat);
            }
            Network::Mmr(s) => {
                let n = s.mlp1.read_flat(flat);
                s.mlp2.read_flat(&flat[n..]);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Network::Init(s) => s.validate(),
            Network::Mmr(s) => s.validate(),
        }
    }

    /// Scores of an example's candidates.
    pub fn scores(&self, example: &Example<T>) -> Result<Vec<T>> {
        match (self, example) {
            (Network::Init(s), Example::Init { candidates, .. }) => {
                candidates.iter().map(|c| s.score_features(c)).collect()
            }
            (Network::Mmr(s), Example::Mmr { candidates, .. }) => {
                candidates.iter().map(|c| s.score_candidate(c)).collect()
            }
            _ => Err(Error::Shape("example kind does not match the network".into())),
        }
    }

    pub fn loss(&self, example: &Example<T>) -> Result<T> {
        let scores = self.scores(example)?;
        Ok(weighted_cross_entropy(&scores, example.labels()).0)
    }

    /// Loss of one example and its exact gradient in flat parameter order.
    pub fn loss_and_grad(&self, example: &Example<T>) -> Result<(T, Vec<T>)> {
        let mut grad = vec![T::zero(); self.num_params()];
        let loss = self.accumulate(example, &mut grad)?;
        Ok((loss, grad))
    }

    fn accumulate(&self, example: &Example<T>, grad: &mut [T]) -> Result<T> {
        let (loss, d_scores) = match (self, example) {
            (Network::Init(s), Example::Init { candidates, labels }) => {
                let traces: Vec<ForwardTrace<T>> =
                    candidates.iter().map(|c| s.mlp0.forward(c)).collect::<Result<_>>()?;
                let scores: Vec<T> = traces.iter().map(|t| t.output()[0]).collect();
                let (loss, ds) = weighted_cross_entropy(&scores, labels);
                for (t, d) in traces.iter().zip(&ds) {
                    if *d != T::zero() {
                        s.mlp0.backward(t, &[*d], grad);
                    }
                }
                (loss, ds)
            }
            (Network::Mmr(s), Example::Mmr { candidates, labels }) => {
                let fwds: Vec<MmrForward<T>> = candidates.iter().map(|c| s.forward(c)).collect::<Result<_>>()?;
                let scores: Vec<T> = fwds.iter().map(|f| f.head.output()[0]).collect();
                let (loss, ds) = weighted_cross_entropy(&scores, labels);
                for (f, d) in fwds.iter().zip(&ds) {
                    if *d != T::zero() {
                        s.backward(f, *d, grad);
                    }
                }
                (loss, ds)
            }
            _ => return Err(Error::Shape("example kind does not match the network".into())),
        };
        if !loss.is_finite() || d_scores.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite { layer: "loss".into() });
        }
        Ok(loss)
    }
}

/// Summed loss and gradient over a batch.
pub fn gradients<T: Scalar>(network: &Network<T>, batch: &[Example<T>]) -> Result<(T, Vec<T>)> {
    let mut grad = vec![T::zero(); network.num_params()];
    let mut loss = T::zero();
    for ex in batch {
        loss += network.accumulate(ex, &mut grad)?;
    }
    Ok((loss, grad))
}

/// Σ over history sets h of the listwise loss of (target, related, off-topic)
/// scored under h.
pub fn loss_mmr_history<T: Scalar, S: AsRef<str>>(
    scorer: &MmrScorer<T>,
    encoder: &impl PairEncoder,
    topic: &str,
    triplet: [&str; 3],
    histories: &[Vec<S>],
) -> Result<T> {
    let labels = [T::of(2.0), T::one(), T::zero()];
    let mut total = T::zero();
    for h in histories {
        let scores: Vec<T> = triplet
            .iter()
            .map(|q| scorer.score(encoder, q, topic, h))
            .collect::<Result<_>>()?;
        total += weighted_cross_entropy(&scores, &labels).0;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::encoder::LexicalEncoder;
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_mmr(seed: u64) -> MmrScorer<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = MmrScorer::<f64>::new(8, 4, Some(4), None).unwrap();
        MmrScorer {
            mlp1: s.mlp1.randomized(&mut rng, 0.5),
            mlp2: s.mlp2.randomized(&mut rng, 0.5),
        }
    }

    #[test]
    fn init_identity_and_zero() {
        let enc = LexicalEncoder::uniform(0);
        let mut s = InitScorer::<f64>::new(8, None).unwrap();
        assert_eq!(s.score(&enc, "a b", "a c").unwrap(), 0.0);
        s.mlp0.layers[0].weights[0] = 1.0;
        assert_abs_diff_eq!(s.score(&enc, "a b", "a c").unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert!(InitScorer::<f64>::new(8, Some(5)).is_err());
    }

    #[test]
    fn init_monotone_on_dominating_features() {
        let enc = LexicalEncoder::uniform(0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut s = InitScorer::<f64>::new(8, None).unwrap();
            s.mlp0 = s.mlp0.randomized(&mut rng, 1.0);
            s.mlp0.layers[0].weights.iter_mut().for_each(|w| *w = w.abs());
            s.mlp0.layers[0].weights[5] = 0.0; // length difference is not dominated
            s.mlp0.layers[0].bias[0] = 0.0;
            let same = s.score(&enc, "rice university", "rice university").unwrap();
            let disjoint = s.score(&enc, "jaguar cars", "rice university").unwrap();
            assert!(same >= disjoint);
        }
    }

    #[test]
    fn empty_history_is_zero_pool() {
        let enc = LexicalEncoder::uniform(0);
        let s = random_mmr(1);
        let none: [&str; 0] = [];
        let got = s.score(&enc, "rice recipes", "rice", &none).unwrap();
        let mut z = s.mlp1.apply(&enc.encode("rice", "rice recipes").unwrap()).unwrap();
        z.extend([0.0; 4]);
        assert_eq!(got, s.mlp2.apply(&z).unwrap()[0]);
    }

    #[test]
    fn history_permutation_and_duplication() {
        let enc = LexicalEncoder::uniform(0);
        let s = random_mmr(2);
        let q = "rice farming grain";
        let a = s.score(&enc, q, "rice", &["rice recipes", "rice university"]).unwrap();
        let b = s.score(&enc, q, "rice", &["rice university", "rice recipes"]).unwrap();
        assert_eq!(a, b);
        let one = s.score(&enc, q, "rice", &["rice recipes"]).unwrap();
        let dup = s.score(&enc, q, "rice", &["rice recipes", "rice recipes"]).unwrap();
        assert_eq!(one, dup);
    }

    #[test]
    fn history_loss_forms() {
        let enc = LexicalEncoder::uniform(0);
        let zero = MmrScorer::<f64>::new(8, 4, None, None).unwrap();
        let trip = ["rice university", "rice recipes", "jaguar"];
        let h = vec![vec![], vec!["rice farming"], vec!["rice farming", "rice cakes"]];
        assert_abs_diff_eq!(
            loss_mmr_history(&zero, &enc, "rice", trip, &h).unwrap(),
            3.0 * 3.0 * 3f64.ln(),
            epsilon = 1e-12
        );
        let s = random_mmr(4);
        let single = loss_mmr_history(&s, &enc, "rice", trip, &h[..1]).unwrap();
        let scores: Vec<f64> = trip
            .iter()
            .map(|q| s.score::<&str>(&enc, q, "rice", &[]).unwrap())
            .collect();
        assert_abs_diff_eq!(
            single,
            super::super::loss::loss_listwise(&scores, &[2.0, 1.0, 0.0]),
            epsilon = 1e-14
        );
        let reordered = vec![vec!["rice cakes", "rice farming"], vec!["rice farming"], vec![]];
        let h_rev = vec![vec![], vec!["rice farming"], vec!["rice farming", "rice cakes"]];
        assert_abs_diff_eq!(
            loss_mmr_history(&s, &enc, "rice", trip, &h_rev).unwrap(),
            loss_mmr_history(&s, &enc, "rice", trip, &reordered).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_weight_pairwise_bias_gradient() {
        // Scores are 0 for both members, P(q+) = 1/2. The q+ path contributes
        // P(q+) − 1 to the output bias and the q− path P(q−); they cancel.
        let net = Network::Init(InitScorer::<f64>::new(3, None).unwrap());
        let batch: Vec<Example<f64>> = (0..4)
            .map(|i| Example::Init {
                candidates: vec![vec![i as f64, 1.0, 0.5], vec![0.0, 2.0, i as f64]],
                labels: vec![1.0, 0.0],
            })
            .collect();
        let (loss, g) = gradients(&net, &batch).unwrap();
        assert_abs_diff_eq!(loss, 4.0 * 2f64.ln(), epsilon = 1e-12);
        let bias = g[3];
        assert_abs_diff_eq!(bias, 4.0 * ((0.5 - 1.0) + 0.5), epsilon = 1e-15);
        // weight gradient: Σ (p+ − 1)·x+ + p−·x−
        let expected_w0: f64 = (0..4).map(|i| -0.5 * i as f64).sum();
        assert_abs_diff_eq!(g[0], expected_w0, epsilon = 1e-12);
    }

    #[test]
    fn zero_grades_zero_gradient() {
        let s = random_mmr(5);
        let net = Network::Mmr(s);
        let cand = MmrCandidate {
            topic_pair: vec![0.3; 8],
            history_pairs: vec![vec![0.1; 8]],
        };
        let ex = Example::Mmr {
            candidates: vec![cand.clone(), cand.clone(), cand],
            labels: vec![0.0; 3],
        };
        let (loss, g) = net.loss_and_grad(&ex).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn mismatched_example_is_shape_error() {
        let net = Network::Init(InitScorer::<f64>::new(2, None).unwrap());
        let ex = Example::Mmr {
            candidates: vec![],
            labels: vec![],
        };
        assert!(matches!(net.loss_and_grad(&ex), Err(Error::Shape(_))));
    }

    #[test]
    fn flat_round_trip() {
        let mut net = Network::Mmr(random_mmr(6));
        let flat = net.flat();
        let mut other = Network::Mmr(MmrScorer::<f64>::new(8, 4, Some(4), None).unwrap());
        other.set_flat(&flat);
        assert_eq!(other, net);
        net.set_flat(&vec![0.0; flat.len()]);
        assert!(net.flat().iter().all(|x| *x == 0.0));
    }
}
