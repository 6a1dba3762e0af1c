//! Empirical coverage and the bound-verification harness.

use serde::Serialize;

use super::exec::{chunk_count, chunk_range, Execution};
use super::rng::{derive_seed, Purpose};
use super::sampler::{sample_with, FamilyKind, SamplerSpec};
use crate::chebyshev::{chebyshev_coverage_bound, gaussian_exact_coverage, whitener_for, Whitener};
use crate::error::{invalid, Result};
use crate::moments::{fit_moments, schur_conditional, Divisor, SampleSet};

/// Whether verification whitens with the analytic moments or with moments fitted to the draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentsMode {
    #[default]
    True,
    Fitted,
}

/// Three binomial standard errors at the worst case `p = 1/2`.
pub fn mc_slack(samples: usize) -> f64 {
    3.0 * (0.25 / samples as f64).sqrt()
}

fn check_compatible(w: &Whitener, data: &SampleSet) -> Result<()> {
    if w.source_dim() != data.dim() {
        return invalid(format!(
            "data has dimension {}, whitener expects {}",
            data.dim(),
            w.source_dim()
        ));
    }
    Ok(())
}

/// Per-chunk `(count with Z < eps, sum of Z)`, combined in chunk order.
fn scan(w: &Whitener, data: &SampleSet, eps: f64, exec: Execution) -> (usize, f64) {
    let count = data.count();
    let parts = exec.map_indexed(chunk_count(count), |c| {
        let mut inside = 0usize;
        let mut sum = 0.0;
        for i in chunk_range(c, count) {
            let z = w.mahalanobis_sq_unchecked(data.row(i));
            sum += z;
            if z < eps {
                inside += 1;
            }
        }
        (inside, sum)
    });
    parts
        .into_iter()
        .fold((0, 0.0), |(a, s), (b, t)| (a + b, s + t))
}

/// Fraction of rows with `Z < eps` (strict).
pub fn empirical_coverage(w: &Whitener, data: &SampleSet, eps: f64) -> Result<f64> {
    empirical_coverage_with(w, data, eps, Execution::default())
}

pub fn empirical_coverage_with(
    w: &Whitener,
    data: &SampleSet,
    eps: f64,
    exec: Execution,
) -> Result<f64> {
    check_compatible(w, data)?;
    if !(eps > 0.0) {
        return invalid(format!("eps = {eps} must be positive"));
    }
    let (inside, _) = scan(w, data, eps, exec);
    Ok(inside as f64 / data.count() as f64)
}

/// Sample mean of `Z` over the rows.
pub fn mean_mahalanobis_sq(w: &Whitener, data: &SampleSet) -> Result<f64> {
    check_compatible(w, data)?;
    let (_, sum) = scan(w, data, 0.0, Execution::default());
    Ok(sum / data.count() as f64)
}

/// One `(ε, coverage)` comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub dim: usize,
    pub effective_rank: usize,
    pub eps: f64,
    pub chebyshev_lower: f64,
    pub empirical_coverage: f64,
    pub gaussian_exact: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub row_seed: u64,
    pub slack: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub family: FamilyKind,
    pub moments: MomentsMode,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }

    pub fn is_ok(&self) -> bool {
        self.violations() == 0
    }
}

/// One report row per `eps`, each from its own sample stream derived from `(seed, row)`.
pub fn verify_bound(
    spec: &SamplerSpec,
    eps_list: &[f64],
    samples: usize,
    seed: u64,
    moments: MomentsMode,
) -> Result<BoundReport> {
    verify_bound_with(spec, eps_list, samples, seed, moments, Execution::default())
}

pub fn verify_bound_with(
    spec: &SamplerSpec,
    eps_list: &[f64],
    samples: usize,
    seed: u64,
    moments: MomentsMode,
    exec: Execution,
) -> Result<BoundReport> {
    if eps_list.is_empty() {
        return invalid("at least one eps value is required");
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return invalid(format!("eps = {e} must be positive and finite"));
    }
    if samples == 0 {
        return invalid("sample count must be at least 1");
    }
    let true_whitener = match moments {
        MomentsMode::True => Some(whitener_for(&spec.true_model()?)?),
        MomentsMode::Fitted => None,
    };
    let mut rows = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let row_seed = derive_seed(seed, Purpose::ReportRow, i as u64);
        let data = sample_with(spec, samples, row_seed, exec)?;
        let fitted;
        let w = match &true_whitener {
            Some(w) => w,
            None => {
                fitted = whitener_for(&fit_moments(&data, Divisor::Population)?)?;
                &fitted
            }
        };
        let r = w.rank();
        let empirical = empirical_coverage_with(w, &data, eps, exec)?;
        let lower = chebyshev_coverage_bound(r, eps)?;
        let gaussian_exact = match spec.kind() {
            FamilyKind::Gaussian => Some(gaussian_exact_coverage(r, eps)?),
            _ => None,
        };
        rows.push(BoundRow {
            dim: spec.dim(),
            effective_rank: r,
            eps,
            chebyshev_lower: lower,
            empirical_coverage: empirical,
            gaussian_exact,
            samples,
            seed,
            row_seed,
            slack: empirical - lower,
            violated: empirical < lower - mc_slack(samples),
        });
    }
    Ok(BoundReport {
        family: spec.kind(),
        moments,
        rows,
    })
}

/// Coverage of the conditional ellipsoid of the last `n − k` coordinates given the first `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalRow {
    pub observed: Vec<f64>,
    pub effective_dim: usize,
    pub eps: f64,
    pub chebyshev_lower: f64,
    pub empirical_coverage: f64,
    pub gaussian_exact: Option<f64>,
    pub samples: usize,
}

/// Draws from `Y | X = x_obs` and measures conditional coverage.
///
/// Each joint draw `(X, Y)` is moved to `Y + G(x_obs − X)` with the regression
/// gain `G` of the analytic moments. The result has mean `μ(x)` and covariance
/// `V(x)` for every family, and is exactly the conditional law when the family
/// is Gaussian.
pub fn verify_conditional(
    spec: &SamplerSpec,
    k: usize,
    x_obs: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<ConditionalRow> {
    let joint = spec.true_model()?;
    let cond = schur_conditional(&joint, k, x_obs)?;
    let model = cond.to_model(joint.rank_tol())?;
    let w = whitener_for(&model)?;
    let data = sample_with(spec, samples, seed, Execution::default())?;
    let n = spec.dim();
    let m = n - k;
    let gain = cond.gain();
    let mut moved = Vec::with_capacity(samples * m);
    let mut shift = vec![0.0; k];
    for row in data.rows() {
        for (s, (o, x)) in shift.iter_mut().zip(x_obs.iter().zip(&row[..k])) {
            *s = o - x;
        }
        for (i, y) in row[k..].iter().enumerate() {
            moved.push(y + crate::linalg::dot(gain.row(i), &shift));
        }
    }
    let moved = SampleSet::from_flat(m, moved)?;
    let empirical = empirical_coverage(&w, &moved, eps)?;
    let r = w.rank();
    Ok(ConditionalRow {
        observed: x_obs.to_vec(),
        effective_dim: r,
        eps,
        chebyshev_lower: chebyshev_coverage_bound(r, eps)?,
        empirical_coverage: empirical,
        gaussian_exact: match spec.kind() {
            FamilyKind::Gaussian => Some(gaussian_exact_coverage(r, eps)?),
            _ => None,
        },
        samples,
    })
}
