//! Scalar abstraction for the geometric kernels.
//!
//! Every module in this crate is generic over a floating-point scalar so the
//! same code instantiates at `f32` and `f64`. Tolerances are part of the
//! scalar contract: an absolute tie tolerance on the score scale, a relative
//! coincidence/coplanarity tolerance for geometry, and a relative
//! singular-value threshold for affine-rank detection. The `f64` values are
//! the reference configuration; the `f32` values are scaled to that type's
//! resolution.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance on the score scale for argmax tie detection.
    fn tie_tol() -> Self;

    /// Relative tolerance (to the bounding-box diameter) for vertex
    /// coincidence and facet coplanarity tests.
    fn geom_tol() -> Self;

    /// Relative singular-value threshold for affine-hull rank detection.
    fn rank_tol() -> Self;

    /// Lossless-enough conversion from an `f64` constant.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl Scalar for f64 {
    fn tie_tol() -> Self {
        1e-9
    }
    fn geom_tol() -> Self {
        1e-9
    }
    fn rank_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn tie_tol() -> Self {
        1e-4
    }
    fn geom_tol() -> Self {
        1e-5
    }
    fn rank_tol() -> Self {
        1e-6
    }
}
