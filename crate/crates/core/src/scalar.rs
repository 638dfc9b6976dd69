//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar the linear algebra and Monte Carlo code is written against.
///
/// Implemented for `f32` and `f64`. The tolerances attached to the trait are
/// the ones the crate uses when it checks that a basis is orthonormal.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Largest accepted `‖Q^H Q − I‖_F` for a basis to count as orthonormal.
    const ORTHO_TOL: Self;

    /// Relative threshold below which a singular value is treated as zero.
    const RANK_TOL: Self;

    /// Draw one standard normal variate.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real")
    }
}

impl Real for f64 {
    const ORTHO_TOL: Self = 1e-10;
    const RANK_TOL: Self = 1e-10;

    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    const ORTHO_TOL: Self = 1e-4;
    const RANK_TOL: Self = 1e-5;

    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
