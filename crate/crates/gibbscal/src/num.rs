//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point scalar so the same code runs in `f32` or `f64`.
//!
//! [`Scalar`] bundles the linear-algebra bound (`nalgebra::RealField`) with
//! primitive-cast and sampling support. Concrete aliases for the common
//! `f64` instantiation live at the crate root.

use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Sampling support a scalar type must provide for the RNG-driven routines.
///
/// Implemented for `f32` and `f64` by delegating to `rand_distr`, which keeps
/// the generic code free of per-type distribution bounds.
pub trait SampleScalar: Sized {
    /// One standard-normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// One Gamma(shape, scale) draw (scale parameterization, mean = shape·scale).
    fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self, scale: Self) -> Self;
}

macro_rules! impl_sample_scalar {
    ($t:ty) => {
        impl SampleScalar for $t {
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(StandardNormal)
            }
            fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self, scale: Self) -> Self {
                Gamma::new(shape, scale)
                    .expect("gamma parameters validated by caller")
                    .sample(rng)
            }
        }
    };
}

impl_sample_scalar!(f32);
impl_sample_scalar!(f64);

/// Floating-point scalar usable throughout the crate: real-field arithmetic,
/// lossless-enough casts to and from `f64`, uniform-range sampling, and the
/// distribution draws of [`SampleScalar`].
pub trait Scalar:
    nalgebra::RealField
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + SampleUniform
    + SampleScalar
    + Copy
    + Default
    + std::iter::Sum
    + for<'a> std::iter::Sum<&'a Self>
{
    /// Converts an `f64` constant into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Converts to `f64` (exact for f64, widening for f32).
    fn f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Converts a count into this scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: nalgebra::RealField
        + num_traits::FromPrimitive
        + num_traits::ToPrimitive
        + SampleUniform
        + SampleScalar
        + Copy
        + Default
        + std::iter::Sum
        + for<'a> std::iter::Sum<&'a T>
{
}

/// Absolute value, disambiguated between the `ComplexField` and `Signed`
/// supertraits of `RealField`.
pub fn abs<S: Scalar>(x: S) -> S {
    nalgebra::ComplexField::abs(x)
}
