//! Scalar abstraction shared by the neural scorers and the ranking metrics.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point type usable by the networks, losses, optimizer and metrics.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Default + Debug + Display + Send + Sync + 'static
{
}

/// Stable descending comparison on scores with ascending-id tie-break.
pub(crate) fn by_score_desc<K: Ord>(a: (&K, f64), b: (&K, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}
