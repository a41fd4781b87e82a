//! Seeded random states for tests and validation checks.

use crate::linalg::ComplexMatrix;
use crate::quantum::{DensityOperator, PureState};
use crate::scalar::Scalar;
use num_complex::Complex;
use rand::Rng;

/// Full-rank random density operator (Ginibre-style: `A A† / tr`).
pub fn random_density<T: Scalar, R: Rng>(rng: &mut R, dim: usize) -> DensityOperator<T> {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)))
    });
    let aa = a.mul(&a.adjoint());
    let trace = aa.trace().re;
    DensityOperator::new(aa.scale(T::one() / trace)).expect("Ginibre construction is valid")
}

/// Haar-ish random pure state (normalized uniform amplitudes).
pub fn random_pure<T: Scalar, R: Rng>(rng: &mut R, dim: usize) -> PureState<T> {
    loop {
        let amps: Vec<Complex<T>> = (0..dim)
            .map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
            .collect();
        let norm: T = amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if norm > T::lit(1e-3) {
            let amps = amps.into_iter().map(|a| a.unscale(norm)).collect();
            return PureState::new(amps).expect("normalized by construction");
        }
    }
}
