use crate::num::Scalar;

/// Exp-normalize with max subtraction.
pub fn softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|s| (*s - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn log_softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = scores.iter().map(|s| (*s - max).exp()).sum::<T>().ln() + max;
    scores.iter().map(|s| *s - lse).collect()
}

/// −Σ_i y_i·log softmax(s)_i and its gradient (Σy)·p_i − y_i.
pub fn weighted_cross_entropy<T: Scalar>(scores: &[T], labels: &[T]) -> (T, Vec<T>) {
    debug_assert_eq!(scores.len(), labels.len());
    let logp = log_softmax(scores);
    let loss = -labels
        .iter()
        .zip(&logp)
        .filter(|(y, _)| **y != T::zero())
        .map(|(y, lp)| *y * *lp)
        .sum::<T>();
    let total: T = labels.iter().copied().sum();
    let grad = logp.iter().zip(labels).map(|(lp, y)| total * lp.exp() - *y).collect();
    (loss, grad)
}

/// −log P(q+) over the pair (q+, q−).
pub fn loss_pairwise<T: Scalar>(positive: T, negative: T) -> T {
    weighted_cross_entropy(&[positive, negative], &[T::one(), T::zero()]).0
}

/// −Σ_q y(q)·log P(q) over a triplet (or any list) with grades as weights.
pub fn loss_listwise<T: Scalar>(scores: &[T], grades: &[T]) -> T {
    weighted_cross_entropy(scores, grades).0
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
