//! Scalar abstraction shared by the numeric code (CRF inference and training, BM25).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float as NumFloat, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the numeric routines are generic over.
///
/// Implemented for `f32` and `f64`. Weight files always store `f64`, so a
/// model can be loaded into either precision.
pub trait Float: NumFloat + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static {
    fn from_f64_lossy(v: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// `-inf`, the log-space additive identity.
    fn log_zero() -> Self {
        Self::neg_infinity()
    }
}

macro_rules! impl_float {
    ($f:ty) => {
        impl Float for $f {
            #[inline]
            fn from_f64_lossy(v: f64) -> Self {
                v as $f
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_float!(f32);
impl_float!(f64);

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add_exp<F: Float>(a: F, b: F) -> F {
    if a == F::neg_infinity() {
        return b;
    }
    if b == F::neg_infinity() {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln(sum(exp(x)))` over a slice; `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp<F: Float>(xs: &[F]) -> F {
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() || max.is_nan() {
        return max;
    }
    if max == F::infinity() {
        return max;
    }
    let sum: F = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
