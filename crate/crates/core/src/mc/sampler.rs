//! Distribution families with closed-form first and second moments.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::Serialize;

use super::exec::{chunk_count, chunk_range, Execution};
use super::rng::{stream, BoxMuller, Purpose};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::moments::{Divisor, MomentModel, SampleSet, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Gaussian,
    UniformBox,
    StudentT,
    GaussianMixture,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::Gaussian,
        FamilyKind::UniformBox,
        FamilyKind::StudentT,
        FamilyKind::GaussianMixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::UniformBox => "uniform_box",
            FamilyKind::StudentT => "student_t",
            FamilyKind::GaussianMixture => "gaussian_mixture",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown family '{s}'")))
    }
}

#[derive(Debug, Clone)]
enum Family {
    Gaussian {
        mean: Vec<f64>,
        factor: Matrix,
    },
    UniformBox {
        center: Vec<f64>,
        half_widths: Vec<f64>,
    },
    StudentT {
        location: Vec<f64>,
        factor: Matrix,
        dof: f64,
    },
    GaussianMixture {
        means: Vec<Vec<f64>>,
        cumulative: Vec<f64>,
        factor: Matrix,
    },
}

#[derive(Debug, Clone)]
struct Embedding {
    map: Matrix,
    offset: Vec<f64>,
}

/// A samplable distribution together with its analytic mean and covariance.
#[derive(Debug, Clone)]
pub struct SamplerSpec {
    kind: FamilyKind,
    family: Family,
    base_dim: usize,
    embedding: Option<Embedding>,
    true_mean: Vec<f64>,
    true_cov: SymMatrix,
}

/// `T·D^{1/2}`, so that `factor · z` has covariance `cov` when `z` is standard normal.
fn spectral_factor(cov: &SymMatrix) -> Result<Matrix> {
    let model = MomentModel::new(
        vec![0.0; cov.order()],
        cov.clone(),
        Divisor::Population,
        DEFAULT_RANK_TOL,
    )
    .map_err(|e| Error::InvalidSpec(format!("covariance: {e}")))?;
    let s = model.spectral();
    let n = cov.order();
    let mut f = Matrix::zeros(n, n);
    for (j, &l) in s.eigenvalues().iter().enumerate() {
        let root = l.max(0.0).sqrt();
        for i in 0..n {
            f[(i, j)] = s.eigenvectors()[(i, j)] * root;
        }
    }
    Ok(f)
}

fn spec_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidSpec(msg.into()))
}

fn check_vec(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return spec_err(format!("{name} has length {}, expected {n}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return spec_err(format!("{name} has non-finite entries"));
    }
    Ok(())
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return spec_err("dimension must be at least 1");
    }
    Ok(())
}

impl SamplerSpec {
    /// Multivariate normal `N(mean, cov)`.
    pub fn gaussian(mean: Vec<f64>, cov: SymMatrix) -> Result<Self> {
        let n = cov.order();
        check_vec("mean", &mean, n)?;
        let factor = spectral_factor(&cov)?;
        Ok(Self::plain(
            FamilyKind::Gaussian,
            Family::Gaussian {
                mean: mean.clone(),
                factor,
            },
            mean,
            cov,
        ))
    }

    /// Independent uniform coordinates on `center ± half_widths`.
    pub fn uniform_box(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        let n = half_widths.len();
        check_dim(n)?;
        check_vec("center", &center, n)?;
        check_vec("half-widths", &half_widths, n)?;
        if half_widths.iter().any(|&h| h <= 0.0) {
            return spec_err("half-widths must be positive");
        }
        let var: Vec<f64> = half_widths.iter().map(|h| h * h / 3.0).collect();
        let cov = SymMatrix::from_diag(&var)?;
        Ok(Self::plain(
            FamilyKind::UniformBox,
            Family::UniformBox {
                center: center.clone(),
                half_widths,
            },
            center,
            cov,
        ))
    }

    /// Multivariate Student t with `dof > 2`; covariance is `dof/(dof − 2) · scale`.
    pub fn student_t(location: Vec<f64>, scale: SymMatrix, dof: f64) -> Result<Self> {
        if !(dof > 2.0 && dof.is_finite()) {
            return spec_err(format!(
                "student_t needs finite degrees of freedom above 2 (got {dof}); covariance is undefined otherwise"
            ));
        }
        let n = scale.order();
        check_vec("location", &location, n)?;
        let factor = spectral_factor(&scale)?;
        let mut cov = scale.into_matrix();
        let inflate = dof / (dof - 2.0);
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] *= inflate;
            }
        }
        Ok(Self::plain(
            FamilyKind::StudentT,
            Family::StudentT {
                location: location.clone(),
                factor,
                dof,
            },
            location,
            SymMatrix::new(cov)?,
        ))
    }

    /// Finite mixture of normals sharing one covariance.
    pub fn gaussian_mixture(
        means: Vec<Vec<f64>>,
        weights: Vec<f64>,
        cov: SymMatrix,
    ) -> Result<Self> {
        let n = cov.order();
        if means.is_empty() || means.len() != weights.len() {
            return spec_err("mixture needs one weight per component and at least one component");
        }
        for m in &means {
            check_vec("component mean", m, n)?;
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return spec_err("mixture weights must be positive");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return spec_err(format!("mixture weights sum to {total}, expected 1"));
        }
        let factor = spectral_factor(&cov)?;

        let mut mean = vec![0.0; n];
        for (m, &w) in means.iter().zip(&weights) {
            for (acc, &v) in mean.iter_mut().zip(m) {
                *acc += w * v;
            }
        }
        // shared covariance plus between-component spread
        let mut total_cov = cov.into_matrix();
        for (m, &w) in means.iter().zip(&weights) {
            for i in 0..n {
                for j in 0..n {
                    total_cov[(i, j)] += w * (m[i] - mean[i]) * (m[j] - mean[j]);
                }
            }
        }
        let mut cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self::plain(
            FamilyKind::GaussianMixture,
            Family::GaussianMixture {
                means,
                cumulative,
                factor,
            },
            mean,
            SymMatrix::new(total_cov)?,
        ))
    }

    fn plain(kind: FamilyKind, family: Family, true_mean: Vec<f64>, true_cov: SymMatrix) -> Self {
        Self {
            kind,
            family,
            base_dim: true_mean.len(),
            embedding: None,
            true_mean,
            true_cov,
        }
    }

    /// Pushes the distribution through `x ↦ map·x + offset`.
    ///
    /// With an injective `map` into a higher dimension the result has a
    /// rank-deficient covariance of rank `base_dim`.
    pub fn embed(mut self, map: Matrix, offset: Vec<f64>) -> Result<Self> {
        if map.cols() != self.dim() {
            return spec_err(format!(
                "embedding map has {} columns, distribution has dimension {}",
                map.cols(),
                self.dim()
            ));
        }
        check_dim(map.rows())?;
        check_vec("embedding offset", &offset, map.rows())?;
        if !map.is_finite() {
            return spec_err("embedding map has non-finite entries");
        }
        let mut mean = map.mul_vec(&self.true_mean)?;
        for (m, o) in mean.iter_mut().zip(&offset) {
            *m += o;
        }
        let cov = map
            .matmul(self.true_cov.as_matrix())?
            .matmul(&map.transpose())?;
        let cov = SymMatrix::new(cov)?;
        // compose with any earlier embedding
        let embedding = match self.embedding.take() {
            None => Embedding { map, offset },
            Some(prev) => {
                let mut off = map.mul_vec(&prev.offset)?;
                for (a, b) in off.iter_mut().zip(&offset) {
                    *a += b;
                }
                Embedding {
                    map: map.matmul(&prev.map)?,
                    offset: off,
                }
            }
        };
        self.embedding = Some(embedding);
        self.true_mean = mean;
        self.true_cov = cov;
        Ok(self)
    }

    /// Default parameters used by the command line for each family.
    ///
    /// Covariances are AR(1)-style `0.5^|i−j|`; uniform boxes have unit
    /// variance per axis; the mixture has two unequal components at
    /// `±1.5·(1, …, 1)`.
    pub fn standard(kind: FamilyKind, dim: usize, dof: f64) -> Result<Self> {
        check_dim(dim)?;
        let ar = ar1_covariance(dim, 0.5);
        match kind {
            FamilyKind::Gaussian => Self::gaussian(vec![0.0; dim], ar),
            FamilyKind::UniformBox => Self::uniform_box(vec![0.0; dim], vec![3f64.sqrt(); dim]),
            FamilyKind::StudentT => Self::student_t(vec![0.0; dim], ar, dof),
            FamilyKind::GaussianMixture => {
                Self::gaussian_mixture(vec![vec![-1.5; dim], vec![1.5; dim]], vec![0.3, 0.7], ar)
            }
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Dimension of the generated observations.
    pub fn dim(&self) -> usize {
        self.true_mean.len()
    }

    pub fn true_mean(&self) -> &[f64] {
        &self.true_mean
    }

    pub fn true_cov(&self) -> &SymMatrix {
        &self.true_cov
    }

    /// The analytic moments as a model.
    pub fn true_model(&self) -> Result<MomentModel> {
        MomentModel::new(
            self.true_mean.clone(),
            self.true_cov.clone(),
            Divisor::Population,
            DEFAULT_RANK_TOL,
        )
    }

    /// Writes one observation into `out` (length `dim()`).
    fn draw<R: Rng>(&self, g: &mut BoxMuller<R>, z: &mut [f64], base: &mut [f64], out: &mut [f64]) {
        let target: &mut [f64] = if self.embedding.is_some() {
            base
        } else {
            &mut *out
        };
        match &self.family {
            Family::Gaussian { mean, factor } => {
                g.fill(z);
                factor.mul_vec_into(z, target);
                for (t, m) in target.iter_mut().zip(mean) {
                    *t += m;
                }
            }
            Family::UniformBox {
                center,
                half_widths,
            } => {
                for ((t, c), h) in target.iter_mut().zip(center).zip(half_widths) {
                    let u: f64 = g.rng().random();
                    *t = c + h * (2.0 * u - 1.0);
                }
            }
            Family::StudentT {
                location,
                factor,
                dof,
            } => {
                g.fill(z);
                let w: f64 = ChiSquared::new(*dof)
                    .expect("dof validated at construction")
                    .sample(g.rng());
                let s = (dof / w).sqrt();
                factor.mul_vec_into(z, target);
                for (t, m) in target.iter_mut().zip(location) {
                    *t = m + s * *t;
                }
            }
            Family::GaussianMixture {
                means,
                cumulative,
                factor,
            } => {
                let u: f64 = g.rng().random();
                let c = cumulative
                    .iter()
                    .position(|&p| u < p)
                    .unwrap_or(means.len() - 1);
                g.fill(z);
                factor.mul_vec_into(z, target);
                for (t, m) in target.iter_mut().zip(&means[c]) {
                    *t += m;
                }
            }
        }
        if let Some(e) = &self.embedding {
            e.map.mul_vec_into(base, out);
            for (o, b) in out.iter_mut().zip(&e.offset) {
                *o += b;
            }
        }
    }

    /// Draws `count` observations into a flat row-major buffer.
    pub(crate) fn draw_chunk<R: Rng>(&self, rng: R, count: usize) -> Vec<f64> {
        let mut g = BoxMuller::new(rng);
        let dim = self.dim();
        let mut z = vec![0.0; self.base_dim];
        let mut base = vec![0.0; self.base_dim];
        let mut out = vec![0.0; count * dim];
        for row in out.chunks_exact_mut(dim) {
            self.draw(&mut g, &mut z, &mut base, row);
        }
        out
    }
}

/// Covariance with entries `rho^|i−j|`.
pub fn ar1_covariance(n: usize, rho: f64) -> SymMatrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    SymMatrix::new(m).expect("AR(1) covariance is symmetric")
}

/// `count` observations from `spec`, reproducible from `seed`.
pub fn sample(spec: &SamplerSpec, count: usize, seed: u64) -> Result<SampleSet> {
    sample_with(spec, count, seed, Execution::default())
}

pub fn sample_with(
    spec: &SamplerSpec,
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidInput(
            "sample count must be at least 1".into(),
        ));
    }
    let chunks = exec.map_indexed(chunk_count(count), |c| {
        let rng = stream(seed, Purpose::Sample, c as u64);
        spec.draw_chunk(rng, chunk_range(c, count).len())
    });
    SampleSet::from_flat(spec.dim(), chunks.concat())
}
