//! Default cascades in a banking network where defaults force asset sales
//! and depress the common asset price.
//!
//! The analytic modules are generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar for common use. The Monte Carlo
//! simulator and the CLI work in `f64`.

pub mod cascade;
pub mod cli;
pub mod distribution;
pub mod error;
pub mod gaussian;
pub mod roots;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams64 = cascade::ModelParams<f64>;
pub type ModelParams32 = cascade::ModelParams<f32>;
pub type ScenarioParams64 = cascade::ScenarioParams<f64>;
pub type ScenarioParams32 = cascade::ScenarioParams<f32>;
pub type CascadeMap64 = cascade::CascadeMap<f64>;
pub type CascadeMap32 = cascade::CascadeMap<f32>;
pub type CascadeTrajectory64 = cascade::CascadeTrajectory<f64>;
pub type FixedPointSet64 = cascade::FixedPointSet<f64>;
pub type BifurcationGeometry64 = cascade::BifurcationGeometry<f64>;
pub type DistributionSpec64 = distribution::DistributionSpec<f64>;
pub type DistributionSpec32 = distribution::DistributionSpec<f32>;
pub type LossDistribution64 = distribution::LossDistribution<f64>;
pub type LossDistribution32 = distribution::LossDistribution<f32>;
pub type LossCurve64 = distribution::LossCurve<f64>;
