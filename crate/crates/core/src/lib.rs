//! Weighted graphs on spheres, transition spectra, tensor-valued random walks
//! and expander Chernoff bounds for them.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! name the common instantiations. File formats are `f64` only.

pub mod chernoff;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod spectral;
pub mod svg;
pub mod tensor;
pub mod walk;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ManifoldDescriptorF64 = manifold::ManifoldDescriptor<f64>;
pub type ManifoldSamplingF64 = manifold::ManifoldSampling<f64>;
pub type WeightedGraphF64 = graph::WeightedGraph<f64>;
pub type GraphMatricesF64 = graph::GraphMatrices<f64>;
pub type SpectralSummaryF64 = spectral::SpectralSummary<f64>;
pub type HermitianTensorF64 = tensor::HermitianTensor<f64>;
pub type PolynomialSpecF64 = tensor::PolynomialSpec<f64>;
pub type BoundParamsF64 = chernoff::BoundParams<f64>;

pub type ManifoldDescriptorF32 = manifold::ManifoldDescriptor<f32>;
pub type ManifoldSamplingF32 = manifold::ManifoldSampling<f32>;
pub type WeightedGraphF32 = graph::WeightedGraph<f32>;
pub type GraphMatricesF32 = graph::GraphMatrices<f32>;
pub type SpectralSummaryF32 = spectral::SpectralSummary<f32>;
pub type HermitianTensorF32 = tensor::HermitianTensor<f32>;
pub type PolynomialSpecF32 = tensor::PolynomialSpec<f32>;
pub type BoundParamsF32 = chernoff::BoundParams<f32>;
