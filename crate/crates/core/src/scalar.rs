//! Scalar abstraction shared by every numeric module.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{de::DeserializeOwned, Serialize};

/// Floating point type the simulator can run on (`f32` or `f64`).
///
/// Tolerances in this crate are written for `f64`; [`Real::tolerance`] widens
/// them to what the narrower type can actually resolve.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Serialize + DeserializeOwned
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Draws one sample of N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Widens an `f64`-calibrated tolerance for this type.
    fn tolerance(tol: f64) -> Self;
}

macro_rules! impl_real {
    ($t:ty, $floor:expr) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <StandardNormal as Distribution<$t>>::sample(&StandardNormal, rng)
            }

            #[inline]
            fn tolerance(tol: f64) -> Self {
                tol.max($floor) as $t
            }
        }
    };
}

impl_real!(f32, 2e-4);
impl_real!(f64, 0.0);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floor() {
        assert_eq!(<f64 as Real>::tolerance(1e-12), 1e-12);
        assert!(<f32 as Real>::tolerance(1e-12) >= 1e-4);
    }
}
