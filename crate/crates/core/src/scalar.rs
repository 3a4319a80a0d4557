//! Floating-point abstraction shared by the geometry and statistics code.
//!
//! Everything numeric in this crate is written against [`Scalar`], so the
//! same routines run in `f64` (the default used by the type aliases at the
//! crate root) or in `f32`. Tolerances differ between the two precisions and
//! live on the trait rather than being scattered through the code.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for finite input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute tolerance for the symmetry check on 4x4 matrices.
    fn symmetry_tol() -> Self;
    /// Jacobi sweeps stop once the off-diagonal Frobenius norm falls below
    /// this multiple of `max(1, ||A||)`.
    fn jacobi_tol() -> Self;
    /// Relative pivot threshold for the SPD certificate.
    fn pivot_tol() -> Self;
    /// Relative eigengap below which a mean matrix counts as focal.
    fn focal_tol() -> Self;
    /// Lower bound on `|lambda_i|` and on pivots when registering a frame.
    fn frame_tol() -> Self;
    /// Unit-norm tolerance for representatives.
    fn unit_tol() -> Self;
    /// Magnitude under which a component is treated as zero when fixing
    /// the canonical eigenvector sign.
    fn sign_tol() -> Self;
}

impl Scalar for f64 {
    fn symmetry_tol() -> Self {
        1e-12
    }
    fn jacobi_tol() -> Self {
        1e-13
    }
    fn pivot_tol() -> Self {
        1e-12
    }
    fn focal_tol() -> Self {
        1e-9
    }
    fn frame_tol() -> Self {
        1e-10
    }
    fn unit_tol() -> Self {
        1e-12
    }
    fn sign_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn symmetry_tol() -> Self {
        1e-5
    }
    fn jacobi_tol() -> Self {
        1e-6
    }
    fn pivot_tol() -> Self {
        1e-6
    }
    fn focal_tol() -> Self {
        1e-4
    }
    fn frame_tol() -> Self {
        1e-5
    }
    fn unit_tol() -> Self {
        1e-5
    }
    fn sign_tol() -> Self {
        1e-6
    }
}
