//! Scalar abstraction over the real floating-point type.
//!
//! All numerics in this crate are generic over [`Scalar`] so the same code
//! runs at `f64` (the default, and the precision at which the documented
//! tolerances hold) and at `f32` for quick, lower-precision work. Tolerances
//! are associated constants of the scalar type: they encode how tight a
//! numerical check can meaningfully be at that precision, so they scale with
//! the type instead of being sprinkled through the code as magic numbers.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar type underlying all complex matrices and channel numerics.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Maximum Hermitian defect `max |A - A†|` tolerated in a density operator.
    const HERMITIAN_TOL: Self;
    /// Maximum deviation of a density-operator trace from 1.
    const TRACE_TOL: Self;
    /// Most negative eigenvalue tolerated in a positive-semidefinite check.
    const POSITIVITY_TOL: Self;
    /// Maximum absolute entry difference under which two Choi matrices
    /// represent the same map.
    const MAP_EQ_TOL: Self;
    /// Kraus completeness defect `max |Σ K†K - 1|` tolerated in a channel.
    const KRAUS_TOL: Self;
    /// Unitarity defect tolerated in a coupling matrix.
    const UNITARY_TOL: Self;
    /// Norm defect tolerated in a pure-state vector.
    const PURE_NORM_TOL: Self;
    /// Eigenvalues below this contribute zero to von Neumann entropy.
    const EIGENVALUE_FLOOR: Self;
    /// Branch probabilities at or below this are dropped from Markov tables.
    const PROB_FLOOR: Self;
    /// Off-diagonal magnitude at which the Jacobi eigensolver stops sweeping.
    const JACOBI_TOL: Self;

    /// Converts an `f64` literal into the scalar type.
    ///
    /// Used for constants that appear in formulas; the conversion is exact
    /// for `f64` and rounds for `f32`.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    /// `usize` converted to the scalar type.
    fn from_count(value: usize) -> Self {
        Self::from_usize(value).expect("count fits in scalar")
    }
}

impl Scalar for f64 {
    const HERMITIAN_TOL: Self = 1e-10;
    const TRACE_TOL: Self = 1e-10;
    const POSITIVITY_TOL: Self = 1e-10;
    const MAP_EQ_TOL: Self = 1e-10;
    const KRAUS_TOL: Self = 1e-12;
    const UNITARY_TOL: Self = 1e-12;
    const PURE_NORM_TOL: Self = 1e-12;
    const EIGENVALUE_FLOOR: Self = 1e-12;
    const PROB_FLOOR: Self = 1e-14;
    const JACOBI_TOL: Self = 1e-13;
}

impl Scalar for f32 {
    const HERMITIAN_TOL: Self = 1e-4;
    const TRACE_TOL: Self = 1e-4;
    const POSITIVITY_TOL: Self = 1e-4;
    const MAP_EQ_TOL: Self = 1e-4;
    const KRAUS_TOL: Self = 1e-5;
    const UNITARY_TOL: Self = 1e-5;
    const PURE_NORM_TOL: Self = 1e-5;
    const EIGENVALUE_FLOOR: Self = 1e-6;
    const PROB_FLOOR: Self = 1e-7;
    const JACOBI_TOL: Self = 1e-6;
}
