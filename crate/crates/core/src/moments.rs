//! Mean/covariance estimation and linear (Schur complement) conditioning.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{jacobi_eigendecompose, Matrix, SpectralDecomp, SymMatrix};

/// Default relative rank tolerance: `λᵢ` counts iff `λᵢ > DEFAULT_RANK_TOL · λ₁`.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Eigenvalues down to `-PSD_SLACK · λ₁` are treated as roundoff and clamped to zero.
pub const PSD_SLACK: f64 = 1e-9;

/// `N` observations of an `n`-dimensional random vector, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("sample dimension must be at least 1");
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return invalid(format!(
                "{} values do not form a non-empty set of rows of width {dim}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return invalid(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            ));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        Self::from_flat(m.cols(), m.as_slice().to_vec())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Covariance divisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Divisor {
    /// Divide by `N`.
    #[default]
    Population,
    /// Divide by `N − 1`.
    Sample,
}

/// Mean vector, covariance and its cached spectral decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentModel {
    mean: Vec<f64>,
    cov: SymMatrix,
    spectral: SpectralDecomp,
    rank: usize,
    rank_tol: f64,
    divisor: Divisor,
}

impl MomentModel {
    /// Builds a model from known moments.
    ///
    /// Fails if the covariance has an eigenvalue below `-PSD_SLACK · λ₁`.
    pub fn new(mean: Vec<f64>, cov: SymMatrix, divisor: Divisor, rank_tol: f64) -> Result<Self> {
        if mean.len() != cov.order() {
            return invalid(format!(
                "mean has length {} but covariance has order {}",
                mean.len(),
                cov.order()
            ));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return invalid("mean has non-finite entries");
        }
        if !(rank_tol.is_finite() && (0.0..1.0).contains(&rank_tol)) {
            return invalid(format!("rank tolerance {rank_tol} must lie in [0, 1)"));
        }
        let mut spectral = jacobi_eigendecompose(&cov)?;
        let top = spectral.eigenvalues()[0].max(0.0);
        let floor = PSD_SLACK * top;
        let smallest = *spectral.eigenvalues().last().unwrap();
        if smallest < -floor {
            return invalid(format!(
                "covariance is not positive semidefinite (eigenvalue {smallest:e})"
            ));
        }
        spectral.clamp_small_negatives(floor);
        let rank = numerical_rank(spectral.eigenvalues(), rank_tol);
        Ok(Self {
            mean,
            cov,
            spectral,
            rank,
            rank_tol,
            divisor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    pub fn spectral(&self) -> &SpectralDecomp {
        &self.spectral
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn divisor(&self) -> Divisor {
        self.divisor
    }

    /// Same moments, different rank tolerance.
    pub fn with_rank_tol(&self, rank_tol: f64) -> Result<Self> {
        Self::new(self.mean.clone(), self.cov.clone(), self.divisor, rank_tol)
    }
}

/// Count of eigenvalues strictly above `tol · λ₁`. Zero when `λ₁ ≤ 0`.
pub fn numerical_rank(eigenvalues: &[f64], tol: f64) -> usize {
    match eigenvalues.first() {
        Some(&top) if top > 0.0 => eigenvalues.iter().filter(|&&l| l > tol * top).count(),
        _ => 0,
    }
}

/// Fits mean and covariance with the default rank tolerance.
pub fn fit_moments(data: &SampleSet, divisor: Divisor) -> Result<MomentModel> {
    fit_moments_with_tol(data, divisor, DEFAULT_RANK_TOL)
}

/// Two-pass mean then centered-covariance fit.
pub fn fit_moments_with_tol(
    data: &SampleSet,
    divisor: Divisor,
    rank_tol: f64,
) -> Result<MomentModel> {
    let n = data.dim();
    let count = data.count();
    let denom = match divisor {
        Divisor::Population => count as f64,
        Divisor::Sample if count < 2 => {
            return invalid("sample divisor needs at least two observations")
        }
        Divisor::Sample => (count - 1) as f64,
    };

    let mut mean = vec![0.0; n];
    for row in data.rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }

    // upper triangle only
    let mut acc = Matrix::zeros(n, n);
    let mut dev = vec![0.0; n];
    for row in data.rows() {
        for (d, (&x, &m)) in dev.iter_mut().zip(row.iter().zip(&mean)) {
            *d = x - m;
        }
        for i in 0..n {
            let di = dev[i];
            for j in i..n {
                acc[(i, j)] += di * dev[j];
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let v = acc[(i, j)] / denom;
            acc[(i, j)] = v;
            acc[(j, i)] = v;
        }
    }
    MomentModel::new(mean, SymMatrix::new(acc)?, divisor, rank_tol)
}

/// Moments of the trailing `n − k` coordinates given the leading `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    observed_dim: usize,
    mu_cond: Vec<f64>,
    cov_cond: SymMatrix,
    gain: Matrix,
}

impl ConditionalMoments {
    pub fn observed_dim(&self) -> usize {
        self.observed_dim
    }

    /// `μ(x) = μ_Y + G(x − μ_X)`.
    pub fn mu_cond(&self) -> &[f64] {
        &self.mu_cond
    }

    /// `V(x) = V_YY − V_YX V_XX⁻¹ V_XY`; does not depend on `x`.
    pub fn cov_cond(&self) -> &SymMatrix {
        &self.cov_cond
    }

    /// Regression gain `G = V_YX V_XX⁻¹`, `(n − k) × k`.
    pub fn gain(&self) -> &Matrix {
        &self.gain
    }

    /// Conditional moments packaged as a model over the `n − k` free coordinates.
    pub fn to_model(&self, rank_tol: f64) -> Result<MomentModel> {
        MomentModel::new(
            self.mu_cond.clone(),
            self.cov_cond.clone(),
            Divisor::Population,
            rank_tol,
        )
    }
}

/// Conditions the model on its first `k` coordinates taking the values `x_obs`.
///
/// Exact for Gaussian (more generally, linear-regression) models. For other
/// distributions the result is the best linear predictor and its residual
/// covariance, not the true conditional moments.
pub fn schur_conditional(
    model: &MomentModel,
    k: usize,
    x_obs: &[f64],
) -> Result<ConditionalMoments> {
    let n = model.dim();
    if k == 0 || k >= n {
        return invalid(format!(
            "conditioning size k = {k} must satisfy 1 <= k < {n}"
        ));
    }
    if x_obs.len() != k {
        return invalid(format!(
            "observed vector has length {}, expected {k}",
            x_obs.len()
        ));
    }
    if x_obs.iter().any(|v| !v.is_finite()) {
        return invalid("observed vector has non-finite entries");
    }
    let m = n - k;
    let v = model.cov().as_matrix();
    let vxx = model.cov().principal_block(0, k);
    let vyx = v.block(k, 0, m, k);
    let vyy = v.block(k, k, m, m);

    let sx = jacobi_eigendecompose(&vxx)?;
    let top = sx.eigenvalues()[0];
    let smallest = *sx.eigenvalues().last().unwrap();
    if !(top > 0.0) || smallest <= model.rank_tol() * top {
        return Err(Error::SingularBlock {
            eigenvalue: smallest,
        });
    }

    // V_XX⁻¹ = T diag(1/λ) T'
    let t = sx.eigenvectors();
    let mut inv = Matrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let s: f64 = sx
                .eigenvalues()
                .iter()
                .enumerate()
                .map(|(c, &l)| t[(i, c)] * t[(j, c)] / l)
                .sum();
            inv[(i, j)] = s;
            inv[(j, i)] = s;
        }
    }
    let gain = vyx.matmul(&inv)?;

    let mean = model.mean();
    let shift: Vec<f64> = x_obs.iter().zip(&mean[..k]).map(|(x, m)| x - m).collect();
    let correction = gain.mul_vec(&shift)?;
    let mu_cond: Vec<f64> = mean[k..]
        .iter()
        .zip(&correction)
        .map(|(a, b)| a + b)
        .collect();

    let explained = gain.matmul(&vyx.transpose())?;
    let mut cov = vyy;
    for i in 0..m {
        for j in 0..m {
            cov[(i, j)] -= explained[(i, j)];
        }
    }
    Ok(ConditionalMoments {
        observed_dim: k,
        mu_cond,
        cov_cond: SymMatrix::new(cov)?,
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> SampleSet {
        SampleSet::from_rows(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]]).unwrap()
    }

    #[test]
    fn four_point_square() {
        let m = fit_moments(&square(), Divisor::Population).unwrap();
        assert_eq!(m.mean(), &[1.0, 1.0]);
        assert_eq!(m.cov(), &SymMatrix::identity(2));
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn sample_divisor_scales_by_n_over_n_minus_one() {
        let m = fit_moments(&square(), Divisor::Sample).unwrap();
        let expect = 4.0 / 3.0;
        assert!((m.cov().get(0, 0) - expect).abs() < 1e-15);
        assert!((m.cov().get(1, 1) - expect).abs() < 1e-15);
        assert_eq!(m.cov().get(0, 1), 0.0);
    }

    #[test]
    fn repeated_point_is_rank_zero() {
        let p = [3.5, -1.25, 7.0];
        let data = SampleSet::from_rows(&[p; 9]).unwrap();
        let m = fit_moments(&data, Divisor::Population).unwrap();
        assert_eq!(m.mean(), &p);
        assert_eq!(m.cov().as_matrix().max_abs(), 0.0);
        assert_eq!(m.rank(), 0);
    }

    #[test]
    fn single_row_sample_divisor_is_rejected() {
        let data = SampleSet::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            fit_moments(&data, Divisor::Sample),
            Err(Error::InvalidInput(_))
        ));
        assert!(fit_moments(&data, Divisor::Population).is_ok());
    }

    #[test]
    fn non_finite_data_is_rejected() {
        assert!(SampleSet::from_rows(&[[1.0, f64::NAN]]).is_err());
        assert!(SampleSet::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(SampleSet::from_flat(2, vec![]).is_err());
    }

    #[test]
    fn far_from_origin_is_stable() {
        let off = 1e9;
        let rows: Vec<[f64; 2]> = square().rows().map(|r| [r[0] + off, r[1] + off]).collect();
        let m = fit_moments(&SampleSet::from_rows(&rows).unwrap(), Divisor::Population).unwrap();
        assert!(m.cov().as_matrix().max_abs_diff(&Matrix::identity(2)) < 1e-12);
    }

    #[test]
    fn row_permutation_invariance() {
        let rows = [[0.3, 1.0], [2.0, -0.5], [1.1, 4.0], [0.0, 0.2], [-3.0, 1.0]];
        let mut rev = rows;
        rev.reverse();
        let a = fit_moments(&SampleSet::from_rows(&rows).unwrap(), Divisor::Population).unwrap();
        let b = fit_moments(&SampleSet::from_rows(&rev).unwrap(), Divisor::Population).unwrap();
        assert!(a.cov().as_matrix().max_abs_diff(b.cov().as_matrix()) < 1e-14);
        for (x, y) in a.mean().iter().zip(b.mean()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_covariance_is_rejected() {
        let cov = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(
            MomentModel::new(vec![0.0; 2], cov, Divisor::Population, DEFAULT_RANK_TOL).is_err()
        );
    }

    #[test]
    fn rank_tolerance_is_relative() {
        assert_eq!(numerical_rank(&[3.0, 3e-18], DEFAULT_RANK_TOL), 1);
        assert_eq!(numerical_rank(&[3e-20, 3e-21], DEFAULT_RANK_TOL), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], DEFAULT_RANK_TOL), 0);
    }

    fn known(mean: Vec<f64>, rows: &[&[f64]]) -> MomentModel {
        MomentModel::new(
            mean,
            SymMatrix::from_rows(rows).unwrap(),
            Divisor::Population,
            DEFAULT_RANK_TOL,
        )
        .unwrap()
    }

    #[test]
    fn conditioning_independent_coordinates() {
        let m = MomentModel::new(
            vec![1.0, 2.0, 3.0, 4.0],
            SymMatrix::identity(4),
            Divisor::Population,
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        for k in 1..4 {
            let x = vec![10.0; k];
            let c = schur_conditional(&m, k, &x).unwrap();
            assert_eq!(c.mu_cond(), &m.mean()[k..]);
            assert_eq!(c.cov_cond(), &SymMatrix::identity(4 - k));
        }
    }

    #[test]
    fn conditioning_bivariate() {
        // mu2 + rho (x - mu1) = 0.5 * 2 = 1;  1 - rho^2 = 0.75
        let m = known(vec![0.0, 0.0], &[&[1.0, 0.5], &[0.5, 1.0]]);
        let c = schur_conditional(&m, 1, &[2.0]).unwrap();
        assert!((c.mu_cond()[0] - 1.0).abs() < 1e-15);
        assert!((c.cov_cond().get(0, 0) - 0.75).abs() < 1e-15);
        assert_eq!(c.observed_dim(), 1);
    }

    #[test]
    fn conditioning_block_diagonal_is_exact() {
        let m = known(
            vec![0.5, -1.0, 2.0],
            &[&[2.0, 0.0, 0.0], &[0.0, 3.0, 0.7], &[0.0, 0.7, 1.3]],
        );
        let c = schur_conditional(&m, 1, &[9.0]).unwrap();
        assert_eq!(c.mu_cond(), &[-1.0, 2.0]);
        assert_eq!(
            c.cov_cond(),
            &SymMatrix::from_rows(&[[3.0, 0.7], [0.7, 1.3]]).unwrap()
        );
    }

    #[test]
    fn conditional_covariance_does_not_depend_on_x() {
        let m = known(
            vec![0.0, 1.0, 2.0],
            &[&[2.0, 0.4, 0.3], &[0.4, 1.5, -0.2], &[0.3, -0.2, 1.0]],
        );
        let a = schur_conditional(&m, 2, &[0.0, 0.0]).unwrap();
        let b = schur_conditional(&m, 2, &[5.0, -3.0]).unwrap();
        assert_eq!(a.cov_cond(), b.cov_cond());
        assert_ne!(a.mu_cond(), b.mu_cond());
        let s = jacobi_eigendecompose(a.cov_cond()).unwrap();
        assert!(s.eigenvalues().iter().all(|&l| l > 0.0));
    }

    #[test]
    fn singular_block() {
        let m = known(vec![0.0, 0.0], &[&[0.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            schur_conditional(&m, 1, &[0.0]),
            Err(Error::SingularBlock { .. })
        ));
    }

    #[test]
    fn conditioning_size_out_of_range() {
        let m = known(vec![0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            schur_conditional(&m, 0, &[]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            schur_conditional(&m, 2, &[0.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            schur_conditional(&m, 1, &[0.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
    }
}
