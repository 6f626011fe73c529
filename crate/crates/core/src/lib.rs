//! Difference-of-convex solvers for phase retrieval.
//!
//! The quartic least-squares objective `F(x) = Σ (f(⟨a_i,x⟩) − b_i)²`
//! splits into a difference of convex functions; the outer loop of
//! [`dc::run_dc`] linearizes the concave part and hands each convex
//! subproblem to a first-order inner solver. Sparse recovery, a
//! Gauss-Newton baseline, spectral initialization and a Monte-Carlo
//! benchmark harness round out the crate.

pub mod bench;
pub mod dc;
pub mod error;
pub mod gauss_newton;
pub mod geometry;
pub mod init;
pub mod inner;
mod la;
pub mod model;
pub mod objective;
pub mod rng;
pub mod sparse;

pub use error::{Error, Result};
pub use model::{
    dist_up_to_phase, measure, sample_gaussian_ensemble, FieldTag, LinkFn, LinkFunction,
    MeasurementEnsemble, NoiseModel, NoiseSpec, Signal,
};
pub use objective::SplitObjective;
