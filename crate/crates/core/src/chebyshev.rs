//! Whitening, Mahalanobis distance, concentration ellipsoids and the
//! coverage bounds they satisfy.
//!
//! For a random vector with mean `μ` and covariance `V = T·D·T'`, the
//! whitened vector `Y = D^{-1/2}·T'·(X − μ)` has identity covariance, so
//! `Z = Y'Y` has expectation equal to the number of retained components `r`.
//! Markov's inequality applied to `Z` gives
//!
//! ```text
//! Pr(Z ≥ ε) ≤ r / ε        Pr(Z < ε) ≥ 1 − r / ε
//! ```
//!
//! for every distribution with finite second moments. Rank-deficient
//! covariances drop the null directions and use `r = rank(V)`; conditioning on
//! `k` coordinates leaves `r = n − k`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Matrix, SymMatrix};
use crate::moments::{Divisor, MomentModel, DEFAULT_RANK_TOL};
use crate::special::chi_squared_cdf;

/// Rank-`r` whitening map `x ↦ W(x − μ)`.
///
/// Row `i` of `W` is the `i`-th eigenvector of the source covariance scaled by
/// `1/√λᵢ`; eigenvalues at or below the rank tolerance are dropped instead of
/// being stored as zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitener {
    center: Vec<f64>,
    map: Matrix,
}

impl Whitener {
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// The `r × n` map `W`.
    pub fn map(&self) -> &Matrix {
        &self.map
    }

    pub fn rank(&self) -> usize {
        self.map.rows()
    }

    pub fn source_dim(&self) -> usize {
        self.center.len()
    }

    /// Standardized principal components `Y = W(x − μ)`.
    pub fn whiten(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, m)| a - m).collect();
        Ok(self.map.mul_vec_unchecked(&diff))
    }

    /// `Z = ‖W(x − μ)‖²`, the squared Mahalanobis distance when `rank = n`.
    pub fn mahalanobis_sq(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.mahalanobis_sq_unchecked(x))
    }

    /// As [`mahalanobis_sq`](Self::mahalanobis_sq) without the length and finiteness checks.
    #[inline]
    pub fn mahalanobis_sq_unchecked(&self, x: &[f64]) -> f64 {
        let mut z = 0.0;
        for i in 0..self.map.rows() {
            let y: f64 = self
                .map
                .row(i)
                .iter()
                .zip(x.iter().zip(&self.center))
                .map(|(w, (a, m))| w * (a - m))
                .sum();
            z += y * y;
        }
        z
    }

    /// The quadratic-form matrix `W'W = T·diag(1/λ₁, …, 1/λ_r, 0, …, 0)·T'`.
    ///
    /// Equals `V⁻¹` for full-rank models.
    pub fn metric(&self) -> SymMatrix {
        let n = self.source_dim();
        let mut c = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..self.rank())
                    .map(|k| self.map[(k, i)] * self.map[(k, j)])
                    .sum();
                c[(i, j)] = s;
                c[(j, i)] = s;
            }
        }
        SymMatrix::new(c).expect("W'W is symmetric by construction")
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.source_dim() {
            return invalid(format!(
                "point has dimension {}, whitener expects {}",
                x.len(),
                self.source_dim()
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("point has non-finite coordinates");
        }
        Ok(())
    }
}

/// Whitener retaining eigenvalues `λᵢ > rank_tol · λ₁`.
pub fn make_whitener(model: &MomentModel, rank_tol: f64) -> Result<Whitener> {
    if !(rank_tol.is_finite() && (0.0..1.0).contains(&rank_tol)) {
        return invalid(format!("rank tolerance {rank_tol} must lie in [0, 1)"));
    }
    let spectral = model.spectral();
    let values = spectral.eigenvalues();
    let top = values[0];
    if !(top > 0.0) {
        return Err(Error::DegenerateModel);
    }
    let keep = values.iter().take_while(|&&l| l > rank_tol * top).count();
    let n = model.dim();
    let t = spectral.eigenvectors();
    let mut map = Matrix::zeros(keep, n);
    for (i, &l) in values[..keep].iter().enumerate() {
        let scale = 1.0 / l.sqrt();
        for j in 0..n {
            map[(i, j)] = t[(j, i)] * scale;
        }
    }
    Ok(Whitener {
        center: model.mean().to_vec(),
        map,
    })
}

/// Whitener at the model's own rank tolerance.
pub fn whitener_for(model: &MomentModel) -> Result<Whitener> {
    make_whitener(model, model.rank_tol())
}

/// Free-function form of [`Whitener::mahalanobis_sq`].
pub fn mahalanobis_sq(w: &Whitener, x: &[f64]) -> Result<f64> {
    w.mahalanobis_sq(x)
}

/// `E_ε = {x : (x − c)' V⁻¹ (x − c) < ε}` with `V` possibly singular.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: Vec<f64>,
    shape: SymMatrix,
    eps: f64,
    whitener: Whitener,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, shape: SymMatrix, eps: f64) -> Result<Self> {
        let model = MomentModel::new(center, shape, Divisor::Population, DEFAULT_RANK_TOL)?;
        Self::from_model(&model, eps)
    }

    pub fn from_model(model: &MomentModel, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("squared radius {eps} must be positive and finite"));
        }
        let whitener = whitener_for(model)?;
        Ok(Self {
            center: model.mean().to_vec(),
            shape: model.cov().clone(),
            eps,
            whitener,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn shape(&self) -> &SymMatrix {
        &self.shape
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn whitener(&self) -> &Whitener {
        &self.whitener
    }

    /// Strict membership: `Z(x) < ε`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.whitener.mahalanobis_sq(x)? < self.eps)
    }
}

pub fn ellipsoid_contains(e: &Ellipsoid, x: &[f64]) -> Result<bool> {
    e.contains(x)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        invalid(format!("eps = {eps} must be positive and finite"))
    }
}

/// Markov's inequality for a non-negative variable: `Pr(Z ≥ ε) ≤ min(1, E[Z]/ε)`.
pub fn markov_tail_bound(mean_z: f64, eps: f64) -> Result<f64> {
    if !(mean_z >= 0.0 && mean_z.is_finite()) {
        return invalid(format!("mean {mean_z} must be non-negative and finite"));
    }
    check_eps(eps)?;
    Ok((mean_z / eps).min(1.0))
}

/// Upper bound on `Pr(Z ≥ ε)` for effective dimension `r`.
pub fn chebyshev_tail_bound(effective_dim: usize, eps: f64) -> Result<f64> {
    if effective_dim == 0 {
        return invalid("effective dimension must be at least 1");
    }
    markov_tail_bound(effective_dim as f64, eps)
}

/// Distribution-free lower bound `max(0, 1 − r/ε)` on `Pr(Z < ε)`.
pub fn chebyshev_coverage_bound(effective_dim: usize, eps: f64) -> Result<f64> {
    if effective_dim == 0 {
        return invalid("effective dimension must be at least 1");
    }
    check_eps(eps)?;
    Ok((1.0 - effective_dim as f64 / eps).max(0.0))
}

/// `Pr(χ²_n < ε)`: exact coverage of `E_ε` for a Gaussian vector.
pub fn gaussian_exact_coverage(n: usize, eps: f64) -> Result<f64> {
    if n == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(eps >= 0.0) {
        return invalid(format!("eps = {eps} must be non-negative"));
    }
    chi_squared_cdf(n, eps)
}

/// Coverage bound for the `n − k` free coordinates after conditioning on `k`.
pub fn conditional_coverage_bound(n: usize, k: usize, eps: f64) -> Result<f64> {
    if k == 0 || k >= n {
        return invalid(format!(
            "conditioning size k = {k} must satisfy 1 <= k < n = {n}"
        ));
    }
    chebyshev_coverage_bound(n - k, eps)
}

/// Squared Mahalanobis distance of every row, in row order.
pub fn score_rows<'a, I>(w: &Whitener, rows: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    rows.into_iter().map(|r| w.mahalanobis_sq(r)).collect()
}

/// `(x − μ)' C (x − μ)` for an explicit metric matrix `C`.
pub fn quadratic_form(metric: &SymMatrix, center: &[f64], x: &[f64]) -> Result<f64> {
    let n = metric.order();
    if center.len() != n || x.len() != n {
        return invalid("quadratic form dimension mismatch");
    }
    let d: Vec<f64> = x.iter().zip(center).map(|(a, m)| a - m).collect();
    let cd = metric.as_matrix().mul_vec_unchecked(&d);
    Ok(dot(&d, &cd))
}
