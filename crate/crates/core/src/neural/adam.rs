use serde::{Deserialize, Serialize};

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![T::zero(); num_params],
            v: vec![T::zero(); num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        debug_assert_eq!(params.len(), grad.len());
        self.t += 1;
        let b1 = T::of(self.config.beta1);
        let b2 = T::of(self.config.beta2);
        let lr = T::of(self.config.learning_rate);
        let eps = T::of(self.config.epsilon);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
