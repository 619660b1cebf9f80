use crate::features::FeatureMatrix;

use super::SvmError;

/// Per-column z-score statistics fitted on training rows.
///
/// Columns with zero spread map every input to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    columns: Vec<usize>,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Normalizer {
    pub fn from_parts(columns: Vec<usize>, mean: Vec<f64>, sd: Vec<f64>) -> Result<Self, SvmError> {
        if columns.len() != mean.len() || columns.len() != sd.len() {
            return Err(SvmError::DimensionMismatch { expected: columns.len(), got: mean.len().max(sd.len()) });
        }
        if sd.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || mean.iter().any(|m| !m.is_finite()) {
            return Err(SvmError::NonFinite);
        }
        Ok(Self { columns, mean, sd })
    }

    /// Source columns, in the order of the normalized output.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    /// Picks the fitted columns out of a full-width row and standardizes them.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(&c, (&m, &s))| if s > 0.0 { (row[c] - m) / s } else { 0.0 })
            .collect()
    }
}

/// Fits population mean and standard deviation for `columns` over every row
/// of `matrix`.
pub fn fit_normalizer(matrix: &FeatureMatrix, columns: &[usize]) -> Result<Normalizer, SvmError> {
    if matrix.n_rows() == 0 {
        return Err(SvmError::EmptyMatrix);
    }
    if let Some(&c) = columns.iter().find(|&&c| c >= matrix.n_cols()) {
        return Err(SvmError::ColumnOutOfRange { column: c, width: matrix.n_cols() });
    }
    let n = matrix.n_rows() as f64;
    let mut mean = vec![0.0; columns.len()];
    let mut sd = vec![0.0; columns.len()];
    for (j, &c) in columns.iter().enumerate() {
        let m = matrix.rows().iter().map(|r| r.values[c]).sum::<f64>() / n;
        let var = matrix.rows().iter().map(|r| (r.values[c] - m) * (r.values[c] - m)).sum::<f64>() / n;
        if !(m.is_finite() && var.is_finite()) {
            return Err(SvmError::NonFinite);
        }
        mean[j] = m;
        sd[j] = var.sqrt();
    }
    Ok(Normalizer { columns: columns.to_vec(), mean, sd })
}
