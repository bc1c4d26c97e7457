//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the policies, losses and metrics are generic over.
///
/// Implemented for `f32` and `f64`. Reward oracles always report `f64`; values
/// are converted with [`Real::of`] at the boundary.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    /// Tolerance used when validating that probabilities sum to one.
    fn normalization_tolerance() -> Self {
        Self::of(1e-9).max(Self::epsilon() * Self::of(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log(1 + exp(x))` without overflow.
pub fn softplus<F: Real>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, stable for large magnitudes.
pub fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Mean of a slice; zero for an empty slice.
pub fn mean<F: Real>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::zero();
    }
    xs.iter().copied().sum::<F>() / F::of_usize(xs.len())
}

/// Subtracts the mean and divides by `std + eps` (population standard deviation).
pub fn standardize<F: Real>(xs: &[F], eps: F) -> Vec<F> {
    let m = mean(xs);
    let var = mean(&xs.iter().map(|&x| (x - m) * (x - m)).collect::<Vec<_>>());
    let sd = var.sqrt();
    xs.iter().map(|&x| (x - m) / (sd + eps)).collect()
}
