//! Orthogonal neural networks built from pyramids of two-qubit RBS rotations,
//! with unary-amplitude circuit simulation, shot-based estimation, angle-space
//! backpropagation and classical orthogonality-preserving baselines.
//!
//! Numeric types are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod data;
pub mod error;
pub mod linalg;
pub mod pyramid;
pub mod scalar;
pub mod shots;
pub mod training;
pub mod unary;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type RbsGateF32 = unary::RbsGate<f32>;
pub type RbsGateF64 = unary::RbsGate<f64>;
pub type CircuitF32 = unary::Circuit<f32>;
pub type CircuitF64 = unary::Circuit<f64>;
pub type UnaryStateF32 = unary::UnaryState<f32>;
pub type UnaryStateF64 = unary::UnaryState<f64>;
pub type PyramidLayerF32 = pyramid::PyramidLayer<f32>;
pub type PyramidLayerF64 = pyramid::PyramidLayer<f64>;
pub type NetworkF32 = training::Network<f32>;
pub type NetworkF64 = training::Network<f64>;
pub type DatasetF32 = data::Dataset<f32>;
pub type DatasetF64 = data::Dataset<f64>;
pub type PcaModelF32 = data::PcaModel<f32>;
pub type PcaModelF64 = data::PcaModel<f64>;
