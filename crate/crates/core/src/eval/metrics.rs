use serde::{Deserialize, Serialize};

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainScheme {
    /// Gain 1 for grade 2, else 0.
    Label2Only,
    /// Gain 2^grade − 1.
    Multigrade,
}

impl GainScheme {
    pub fn gain<T: Scalar>(self, grade: u8) -> T {
        match self {
            GainScheme::Label2Only => {
                if grade == 2 {
                    T::one()
                } else {
                    T::zero()
                }
            }
            GainScheme::Multigrade => T::of(2f64.powi(i32::from(grade)) - 1.0),
        }
    }
}

/// Reciprocal rank of the first item satisfying `target`; 0 when none does.
pub fn mrr_by<T: Scalar, G: Copy>(ranked: &[G], target: impl Fn(G) -> bool) -> T {
    ranked
        .iter()
        .position(|g| target(*g))
        .map_or(T::zero(), |i| T::one() / T::of((i + 1) as f64))
}

/// Reciprocal rank of the first grade-2 item.
pub fn mrr<T: Scalar>(grades: &[u8]) -> T {
    mrr_by(grades, |g| g == 2)
}

pub fn dcg_at<T: Scalar>(grades: &[u8], k: usize, scheme: GainScheme) -> T {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| scheme.gain::<T>(*g) / T::of((i as f64 + 2.0).log2()))
        .sum()
}

/// NDCG@k with the ideal ordering taken over `ideal_pool`.
pub fn ndcg_with_ideal<T: Scalar>(grades: &[u8], ideal_pool: &[u8], k: usize, scheme: GainScheme) -> T {
    let mut ideal = ideal_pool.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: T = dcg_at(&ideal, k, scheme);
    if idcg <= T::zero() {
        return T::zero();
    }
    dcg_at::<T>(grades, k, scheme) / idcg
}

/// NDCG@k whose ideal is the best reordering of the list itself.
pub fn ndcg_at<T: Scalar>(grades: &[u8], k: usize, scheme: GainScheme) -> T {
    ndcg_with_ideal(grades, grades, k, scheme)
}

pub fn precision_at_1<T: Scalar>(relevant: &[bool]) -> T {
    match relevant.first() {
        Some(true) => T::one(),
        _ => T::zero(),
    }
}
