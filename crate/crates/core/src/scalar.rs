//! Floating point abstraction shared by the linear algebra, LP and sampler code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the library computes in: `f32` or `f64`.
///
/// Tolerances live here because they depend on the precision. The `f64`
/// values are the reference stack; `f32` values are scaled to its epsilon.
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
    /// Relative tolerance for rank and singularity decisions.
    fn rank_rtol() -> Self;
    /// Absolute tolerance on equality residuals in the LP solver.
    fn feas_tol() -> Self;
    /// Tolerance for "variable sits on its bound".
    fn bound_tol() -> Self;
    /// Reduced-cost tolerance for optimality.
    fn opt_tol() -> Self;
    /// Smallest pivot magnitude the simplex will accept.
    fn pivot_tol() -> Self;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 value representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f64 {
    fn rank_rtol() -> Self {
        1e-10
    }
    fn feas_tol() -> Self {
        1e-9
    }
    fn bound_tol() -> Self {
        1e-12
    }
    fn opt_tol() -> Self {
        1e-11
    }
    fn pivot_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn rank_rtol() -> Self {
        1e-5
    }
    fn feas_tol() -> Self {
        1e-4
    }
    fn bound_tol() -> Self {
        1e-6
    }
    fn opt_tol() -> Self {
        1e-5
    }
    fn pivot_tol() -> Self {
        1e-5
    }
}
