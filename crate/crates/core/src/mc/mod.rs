//! Monte Carlo certification of the coverage bounds.
//!
//! Samplers draw from distribution families whose mean and covariance are
//! known in closed form; the harness whitens each draw with those moments (or
//! with moments fitted to the draw) and compares the fraction of points inside
//! `E_ε` with the distribution-free lower bound.
//!
//! Sampling and scoring are split into fixed chunks with one random stream per
//! chunk. With the `parallel` feature (on by default) chunks run on the rayon
//! pool; results are identical to sequential execution.

pub mod exec;
pub mod harness;
pub mod rng;
pub mod sampler;

pub use exec::Execution;
pub use harness::{
    empirical_coverage, empirical_coverage_with, mc_slack, mean_mahalanobis_sq, verify_bound,
    verify_bound_with, verify_conditional, BoundReport, BoundRow, ConditionalRow, MomentsMode,
};
pub use sampler::{ar1_covariance, sample, sample_with, FamilyKind, SamplerSpec};
