use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Up to this many queries every sign assignment is enumerated.
pub const EXHAUSTIVE_LIMIT: usize = 20;
pub const DEFAULT_ITERATIONS: usize = 100_000;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub p_value: f64,
    pub observed_mean: f64,
    pub exhaustive: bool,
    pub permutations: u64,
}

impl FisherResult {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

fn differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired runs differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Invalid("no queries to compare".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

// Sums whose magnitude reaches the observed one up to rounding.
fn threshold(d: &[f64]) -> f64 {
    let obs = d.iter().sum::<f64>().abs();
    obs - 1e-12 * d.iter().map(|x| x.abs()).sum::<f64>()
}

/// Two-sided paired sign-flip test over all 2^n assignments.
pub fn fisher_exhaustive(a: &[f64], b: &[f64]) -> Result<FisherResult> {
    let d = differences(a, b)?;
    if d.len() > 63 {
        return Err(Error::Invalid(format!("{} queries is too many to enumerate", d.len())));
    }
    let cut = threshold(&d);
    let total = 1u64 << d.len();
    let hits = (0..total)
        .filter(|mask| {
            let s: f64 = d
                .iter()
                .enumerate()
                .map(|(i, x)| if mask >> i & 1 == 1 { -x } else { *x })
                .sum();
            s.abs() >= cut
        })
        .count() as u64;
    Ok(FisherResult {
        p_value: hits as f64 / total as f64,
        observed_mean: d.iter().sum::<f64>() / d.len() as f64,
        exhaustive: true,
        permutations: total,
    })
}

/// Sampled sign flips; the observed assignment is counted as one sample.
pub fn fisher_sampled(a: &[f64], b: &[f64], iterations: usize, seed: u64) -> Result<FisherResult> {
    let d = differences(a, b)?;
    let cut = threshold(&d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..iterations {
        let s: f64 = d.iter().map(|x| if rng.gen::<bool>() { -x } else { *x }).sum();
        if s.abs() >= cut {
            hits += 1;
        }
    }
    Ok(FisherResult {
        p_value: (hits + 1) as f64 / (iterations + 1) as f64,
        observed_mean: d.iter().sum::<f64>() / d.len() as f64,
        exhaustive: false,
        permutations: iterations as u64 + 1,
    })
}

/// Exhaustive for up to [`EXHAUSTIVE_LIMIT`] queries, sampled beyond.
pub fn fisher_randomization(a: &[f64], b: &[f64], iterations: usize, seed: u64) -> Result<FisherResult> {
    if a.len() <= EXHAUSTIVE_LIMIT {
        fisher_exhaustive(a, b)
    } else {
        fisher_sampled(a, b, iterations, seed)
    }
}
