//! Dense feed-forward networks with hand-written backpropagation.
//!
//! Hidden layers use ReLU; the output layer is linear unless configured
//! otherwise. Parameters flatten layer by layer as `weights` (row-major,
//! `out × in`) followed by `bias`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
    Relu,
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(T::zero()),
        }
    }

    fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    #[serde(rename = "in")]
    pub in_dim: usize,
    #[serde(rename = "out")]
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn affine(&self, x: &[T]) -> Vec<T> {
        (0..self.out_dim)
            .map(|o| {
                let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
                row.iter().zip(x).fold(self.bias[o], |acc, (w, xi)| acc + *w * *xi)
            })
            .collect()
    }
}

/// Values kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    inputs: Vec<Vec<T>>,
    pre_activations: Vec<Vec<T>>,
    output: Vec<T>,
}

impl<T> ForwardTrace<T> {
    pub fn output(&self) -> &[T] {
        &self.output
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    pub name: String,
    pub layers: Vec<Dense<T>>,
    #[serde(default)]
    pub output_activation: Activation,
}

impl<T: Scalar> Mlp<T> {
    /// Zero-initialized network `input → hidden… → output`.
    pub fn zeros(name: impl Into<String>, input: usize, hidden: &[usize], output: usize) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        Self {
            name: name.into(),
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            output_activation: Activation::Identity,
        }
    }

    /// Same shape with every parameter drawn uniformly from `[-range, range]`.
    pub fn randomized(mut self, rng: &mut impl Rng, range: f64) -> Self {
        for layer in &mut self.layers {
            for p in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *p = T::of(rng.gen_range(-range..=range));
            }
        }
        self
    }

    pub fn with_output_activation(mut self, act: Activation) -> Self {
        self.output_activation = act;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    /// Check that layer shapes chain and match their parameter vectors.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape(format!("{} has no layers", self.name)));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::Shape(format!("{}.layer{i} parameter sizes", self.name)));
            }
            if i > 0 && self.layers[i - 1].out_dim != l.in_dim {
                return Err(Error::Shape(format!(
                    "{}.layer{i} expects {} inputs, previous layer gives {}",
                    self.name,
                    l.in_dim,
                    self.layers[i - 1].out_dim
                )));
            }
        }
        Ok(())
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            Activation::Relu
        }
    }

    pub fn forward(&self, x: &[T]) -> Result<ForwardTrace<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "{} expects {} inputs, got {}",
                self.name,
                self.input_dim(),
                x.len()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&current);
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    layer: format!("{}.layer{i}", self.name),
                });
            }
            let act = self.activation(i);
            let a: Vec<T> = z.iter().map(|v| act.apply(*v)).collect();
            inputs.push(std::mem::replace(&mut current, a));
            pre.push(z);
        }
        Ok(ForwardTrace {
            inputs,
            pre_activations: pre,
            output: current,
        })
    }

    /// Output only.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.forward(x)?.output)
    }

    /// Accumulate ∂L/∂θ into `grad` (this network's flat slice) given
    /// ∂L/∂output, returning ∂L/∂input.
    pub fn backward(&self, trace: &ForwardTrace<T>, d_output: &[T], grad: &mut [T]) -> Vec<T> {
        debug_assert_eq!(grad.len(), self.num_params());
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.num_params();
        }
        let mut delta = d_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let act = self.activation(i);
            for (d, z) in delta.iter_mut().zip(&trace.pre_activations[i]) {
                *d *= act.derivative(*z);
            }
            let input = &trace.inputs[i];
            let g = &mut grad[offsets[i]..offsets[i] + layer.num_params()];
            let (gw, gb) = g.split_at_mut(layer.weights.len());
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d == T::zero() {
                    continue;
                }
                gb[o] += d;
                for (gwi, xi) in gw[o * layer.in_dim..(o + 1) * layer.in_dim].iter_mut().zip(input) {
                    *gwi += d * *xi;
                }
            }
            let mut prev = vec![T::zero(); layer.in_dim];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d == T::zero() {
                    continue;
                }
                for (p, w) in prev
                    .iter_mut()
                    .zip(&layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim])
                {
                    *p += d * *w;
                }
            }
            delta = prev;
        }
        delta
    }

    pub fn write_flat(&self, out: &mut Vec<T>) {
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
    }

    /// Overwrite parameters from the front of `flat`; returns the count read.
    pub fn read_flat(&mut self, flat: &[T]) -> usize {
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
        i
    }

    /// Convert to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            name: self.name.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    weights: l.weights.iter().map(|w| U::of(w.as_f64())).collect(),
                    bias: l.bias.iter().map(|b| U::of(b.as_f64())).collect(),
                })
                .collect(),
            output_activation: self.output_activation,
        }
    }
}
