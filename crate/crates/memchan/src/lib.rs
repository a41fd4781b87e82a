//! Simulation and analysis toolkit for quantum channels whose noise
//! correlations come from a relaxing local environment.
//!
//! Information carriers interact one at a time with a small environment that
//! relaxes toward a stationary state between interactions. Varying the
//! spacing of the carriers moves the line continuously between a memoryless
//! channel and a perfect-memory channel. The crate builds the resulting
//! composite maps, computes information quantities and transmission rates,
//! and implements the noise-attenuation protocol in which sacrificial
//! carriers steer the environment into a less noisy configuration.
//!
//! All numerics are generic over the real scalar type via [`scalar::Scalar`]
//! (`f64` and `f32` are provided); concrete `f64` aliases for the main types
//! are exported at the crate root.

pub mod attenuation;
pub mod channels;
pub mod linalg;
pub mod markov;
pub mod quantum;
pub mod rates;
pub mod sampling;
pub mod scalar;
pub mod validate;

pub use scalar::Scalar;

/// Default-precision aliases for the core types.
pub type ComplexMatrix64 = linalg::ComplexMatrix<f64>;
pub type DensityOperator64 = quantum::DensityOperator<f64>;
pub type PureState64 = quantum::PureState<f64>;
pub type QuantumChannel64 = quantum::QuantumChannel<f64>;
pub type ChoiMatrix64 = quantum::ChoiMatrix<f64>;
pub type EnvironmentModel64 = channels::EnvironmentModel<f64>;
pub type CarrierSequence64 = channels::CarrierSequence<f64>;
pub type AttenuationProtocol64 = attenuation::AttenuationProtocol<f64>;
pub type RateReport64 = rates::RateReport<f64>;

/// Single-precision aliases.
pub type ComplexMatrix32 = linalg::ComplexMatrix<f32>;
pub type DensityOperator32 = quantum::DensityOperator<f32>;
pub type QuantumChannel32 = quantum::QuantumChannel<f32>;
