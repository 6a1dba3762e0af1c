//! Multivariate Chebyshev concentration ellipsoids.
//!
//! For any random vector `X` with mean `μ` and covariance `V`, the ellipsoid
//! `{x : (x − μ)'V⁻¹(x − μ) < ε}` holds at least `1 − n/ε` of the probability
//! mass. This crate fits `μ` and `V` from data, whitens through the spectral
//! decomposition of `V`, reports that bound (and its rank-deficient and
//! conditional variants) and checks it by simulation.
//!
//! * [`linalg`]: dense matrices and the Jacobi symmetric eigensolver.
//! * [`moments`]: mean/covariance fitting and Schur-complement conditioning.
//! * [`chebyshev`]: whitening, Mahalanobis distance, ellipsoids and bounds.
//! * [`special`]: regularized incomplete gamma (χ² CDF).
//! * [`mc`]: samplers and the Monte Carlo verification harness.
//! * [`cli`]: the `mvcheb` command line and its file formats.

// NaN must fail every range check, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod moments;
pub mod special;

pub use chebyshev::{
    chebyshev_coverage_bound, conditional_coverage_bound, ellipsoid_contains,
    gaussian_exact_coverage, mahalanobis_sq, make_whitener, markov_tail_bound, whitener_for,
    Ellipsoid, Whitener,
};
pub use error::{Error, Result};
pub use linalg::{jacobi_eigendecompose, reconstruct, Matrix, SpectralDecomp, SymMatrix};
pub use moments::{
    fit_moments, fit_moments_with_tol, schur_conditional, ConditionalMoments, Divisor, MomentModel,
    SampleSet, DEFAULT_RANK_TOL,
};
