//! CSV observations and the JSON model file.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::linalg::{Matrix, SymMatrix};
use crate::moments::{Divisor, MomentModel, SampleSet};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Parses comma-separated observations, one per row.
///
/// A first row in which no field parses as a number is taken as a header.
pub fn parse_csv<R: Read>(input: R) -> Result<SampleSet, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut width = None;
    let mut data = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::usage(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if idx == 0 && record.iter().all(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(CliError::usage(format!(
                    "row {line}: expected {w} columns, found {}",
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::usage(format!(
                    "row {line}, column {}: '{field}' is not a number",
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::usage(format!(
                    "row {line}, column {}: value is not finite",
                    col + 1
                )));
            }
            data.push(v);
        }
    }
    let Some(width) = width else {
        return Err(CliError::usage("CSV contains no data rows"));
    };
    SampleSet::from_flat(width, data).map_err(CliError::from)
}

pub fn read_csv(path: &Path) -> Result<SampleSet, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_csv(std::io::BufReader::new(file))
        .map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message)))
}

/// Serialized [`MomentModel`]. Covariance is stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub dim: usize,
    pub divisor: Divisor,
    pub mean: Vec<f64>,
    pub covariance: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub rank_tol: f64,
}

impl ModelFile {
    pub fn from_model(m: &MomentModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            dim: m.dim(),
            divisor: m.divisor(),
            mean: m.mean().to_vec(),
            covariance: m.cov().as_matrix().as_slice().to_vec(),
            eigenvalues: m.spectral().eigenvalues().to_vec(),
            rank: m.rank(),
            rank_tol: m.rank_tol(),
        }
    }

    /// Rebuilds the model; the spectral decomposition is recomputed from the covariance.
    pub fn to_model(&self) -> Result<MomentModel, CliError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(CliError::usage(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let n = self.dim;
        if self.mean.len() != n || self.covariance.len() != n * n || self.eigenvalues.len() != n {
            return Err(CliError::usage(format!(
                "model file fields do not match dimension {n}"
            )));
        }
        let cov = Matrix::from_row_major(n, n, self.covariance.clone())
            .and_then(SymMatrix::new)
            .map_err(CliError::from)?;
        let model = MomentModel::new(self.mean.clone(), cov, self.divisor, self.rank_tol)?;
        if model.rank() != self.rank {
            return Err(CliError::usage(format!(
                "model file records rank {} but its covariance has rank {}",
                self.rank,
                model.rank()
            )));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid model file: {e}")))
    }
}

pub fn read_model(path: &Path) -> Result<MomentModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    ModelFile::from_json(&text)?.to_model()
}
