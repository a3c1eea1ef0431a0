//! Simulation and analysis of multi-pixel spectrally-resolved measurements of
//! an optical frequency comb.
//!
//! The pipeline runs from the spectral field model ([`spectral`]) through
//! multimode Gaussian states over pixel modes ([`gaussian`]), synthetic
//! detector records ([`detection`]) to sensitivity and covariance estimation
//! ([`estimation`]). [`scenario`] wires these together for the standard
//! experiments.
//!
//! All numerics are generic over [`Real`]; the aliases below fix the common
//! `f64` instantiations.

pub mod detection;
pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod io;
pub mod scalar;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type FrequencyGrid = spectral::FrequencyGrid<f64>;
pub type SpectralMode = spectral::SpectralMode<f64>;
pub type PixelArray = spectral::PixelArray<f64>;
pub type PixelModes = spectral::PixelModes<f64>;
pub type Projection = spectral::Projection<f64>;
pub type GaussianState = gaussian::GaussianState<f64>;
pub type SymplecticDecomposition = gaussian::SymplecticDecomposition<f64>;
pub type Supermode = gaussian::Supermode<f64>;
pub type PhotocurrentRecord = detection::PhotocurrentRecord<f64>;
pub type DemodulatedRecord = detection::DemodulatedRecord<f64>;
pub type HomodyneRecord = detection::HomodyneRecord<f64>;
pub type ReconstructedCovariance = estimation::ReconstructedCovariance<f64>;

/// Single-precision instantiations.
pub mod single {
    pub type SpectralMode = crate::spectral::SpectralMode<f32>;
    pub type GaussianState = crate::gaussian::GaussianState<f32>;
    pub type HomodyneRecord = crate::detection::HomodyneRecord<f32>;
}
