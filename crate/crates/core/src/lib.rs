//! Sampling projection determinantal point processes over linear matroids.
//!
//! A full-rank `r x n` feature matrix `A` defines the projection DPP that
//! picks a basis `B` (an `r`-subset of independent columns) with probability
//! `∝ det²(A_{:B})`. The main sampler runs hit-and-run on the zonotope
//! `A [0,1]^n`, maps points to bases with a tiling LP, and corrects the
//! uniform volume weighting with a Metropolis step. Exact chain-rule and
//! basis-exchange samplers serve as baselines, with diagnostics to compare
//! them.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix `f64`.

pub mod diagnostics;
pub mod error;
pub mod lp;
pub mod models;
pub mod numerics;
pub mod samplers;
pub mod scalar;
pub mod trace;
pub mod zonotope;

pub use error::{Error, Result};
pub use numerics::{Basis, FeatureMatrix, Matrix, ProjectionKernel};
pub use scalar::Scalar;
pub use trace::{ChainTrace, StepOutcome, StepRecord};

pub type Matrix64 = numerics::Matrix<f64>;
pub type FeatureMatrix64 = numerics::FeatureMatrix<f64>;
pub type ProjectionKernel64 = numerics::ProjectionKernel<f64>;
pub type LinearProgram64 = lp::LinearProgram<f64>;
pub type LpSolution64 = lp::LpSolution<f64>;
pub type Simplex64 = lp::Simplex<f64>;
pub type Zonotope64 = zonotope::Zonotope<f64>;
pub type TilingObjective64 = zonotope::TilingObjective<f64>;
pub type TileExtractor64 = zonotope::TileExtractor<f64>;
pub type Model64 = samplers::Model<f64>;

pub type FeatureMatrix32 = numerics::FeatureMatrix<f32>;
pub type Model32 = samplers::Model<f32>;
