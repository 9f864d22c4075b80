//! Scalar abstraction for the numeric kernels.
//!
//! All core math (metrics, learners, mitigation kernels) is generic over
//! [`Real`], a floating-point scalar. The crate root exposes `f64` aliases
//! for the common case; `f32` works anywhere the tolerances allow it.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every numeric kernel in this crate.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Default
    + 'static
{
    /// Lossy conversion from `f64`; panics only for types that cannot
    /// represent ordinary finite constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Widening conversion to `f64`.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    /// Numerically stable logistic function.
    fn sigmoid(self) -> Self {
        if self >= Self::zero() {
            (Self::one() + (-self).exp()).recip()
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<T>
        + Debug
        + Display
        + Default
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_symmetry() {
        for &z in &[-30.0f64, -2.5, 0.0, 1.0, 40.0] {
            let s = z.sigmoid();
            assert!((0.0..=1.0).contains(&s));
            assert!((s + (-z).sigmoid() - 1.0).abs() < 1e-12);
        }
        assert_eq!(0.0f64.sigmoid(), 0.5);
        assert!((1.0f32.sigmoid() - 0.7310586).abs() < 1e-6);
    }
}
