//! Gaussian machinery: covariance factors, the chi distribution, and
//! direction sampling on the unit sphere.

mod chi;
mod covariance;
pub mod special;
mod sphere;

pub use chi::ChiDistribution;
pub use covariance::CovarianceFactor;
pub use sphere::{sample_sphere, DirectionSet, Provenance};
