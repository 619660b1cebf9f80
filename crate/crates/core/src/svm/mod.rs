//! Soft-margin binary SVM with an RBF kernel, trained with SMO.
//!
//! Angry is the positive class (+1). A decision value of exactly zero
//! classifies as Angry.

mod cv;
mod normalize;
pub mod smo;

pub use cv::{cross_validate, stratified_folds};
pub use normalize::{fit_normalizer, Normalizer};

use crate::features::{FeatureMatrix, FeatureVector};
use crate::Label;

use smo::{KernelMatrix, SmoParams};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 200;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvmError {
    #[error("training matrix has no rows")]
    EmptyMatrix,
    #[error("no columns selected")]
    EmptyColumns,
    #[error("column {column} out of range for width {width}")]
    ColumnOutOfRange { column: usize, width: usize },
    #[error("training data contains only {0} rows")]
    SingleClass(Label),
    #[error("non-finite feature value")]
    NonFinite,
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(&'static str),
    #[error("{rows} rows cannot be split into {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
}

/// RBF width. `Auto` resolves to `1 / (d * v)` where `d` is the active column
/// count and `v` the mean per-column variance of the normalized training data
/// (`1 / d` when that variance is zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmHyperparams {
    pub c: f64,
    pub gamma: Gamma,
    pub tolerance: f64,
    pub max_passes: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for SvmHyperparams {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            gamma: Gamma::Auto,
            tolerance: DEFAULT_TOLERANCE,
            max_passes: DEFAULT_MAX_PASSES,
            folds: DEFAULT_FOLDS,
            seed: 0,
        }
    }
}

impl SvmHyperparams {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::InvalidHyperparams("C must be positive"));
        }
        if let Gamma::Fixed(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(SvmError::InvalidHyperparams("gamma must be positive"));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(SvmError::InvalidHyperparams("tolerance must be positive"));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidHyperparams("max_passes must be positive"));
        }
        if self.folds < 2 {
            return Err(SvmError::InvalidHyperparams("folds must be at least 2"));
        }
        Ok(())
    }
}

/// `exp(-gamma * ||a - b||^2)`
#[inline]
pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Trained classifier. Support vectors are stored normalized; raw rows are
/// normalized with the embedded statistics before evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
    gamma: f64,
    normalizer: Normalizer,
    input_width: usize,
}

impl SvmModel {
    /// Reassembles a model from stored fields.
    pub fn from_parts(
        support_vectors: Vec<Vec<f64>>,
        dual_coefs: Vec<f64>,
        bias: f64,
        gamma: f64,
        normalizer: Normalizer,
        input_width: usize,
    ) -> Result<Self, SvmError> {
        let d = normalizer.columns().len();
        if support_vectors.len() != dual_coefs.len() {
            return Err(SvmError::DimensionMismatch { expected: support_vectors.len(), got: dual_coefs.len() });
        }
        if let Some(sv) = support_vectors.iter().find(|sv| sv.len() != d) {
            return Err(SvmError::DimensionMismatch { expected: d, got: sv.len() });
        }
        if let Some(&c) = normalizer.columns().iter().find(|&&c| c >= input_width) {
            return Err(SvmError::ColumnOutOfRange { column: c, width: input_width });
        }
        let finite = support_vectors.iter().flatten().chain(&dual_coefs).all(|v| v.is_finite());
        if !finite || !bias.is_finite() || !(gamma.is_finite() && gamma > 0.0) {
            return Err(SvmError::NonFinite);
        }
        Ok(Self { support_vectors, dual_coefs, bias, gamma, normalizer, input_width })
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    /// `alpha_i * y_i` per support vector.
    pub fn dual_coefs(&self) -> &[f64] {
        &self.dual_coefs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn active_columns(&self) -> &[usize] {
        self.normalizer.columns()
    }

    /// Width of the raw rows the model accepts.
    pub fn input_width(&self) -> usize {
        self.input_width
    }

    /// Kernel expansion for an already-normalized point.
    pub fn decision_normalized(&self, u: &[f64]) -> f64 {
        self.support_vectors.iter().zip(&self.dual_coefs).map(|(sv, coef)| coef * rbf(self.gamma, sv, u)).sum::<f64>()
            + self.bias
    }

    pub fn decision_value(&self, row: &[f64]) -> Result<f64, SvmError> {
        if row.len() != self.input_width {
            return Err(SvmError::DimensionMismatch { expected: self.input_width, got: row.len() });
        }
        Ok(self.decision_normalized(&self.normalizer.transform(row)))
    }

    pub fn predict_values(&self, row: &[f64]) -> Result<Label, SvmError> {
        Ok(label_for(self.decision_value(row)?))
    }

    pub fn predict(&self, row: &FeatureVector) -> Result<Label, SvmError> {
        self.predict_values(&row.values)
    }
}

/// Sign rule with ties going to Angry.
pub fn label_for(decision: f64) -> Label {
    if decision >= 0.0 {
        Label::Angry
    } else {
        Label::Relaxed
    }
}

/// Solver diagnostics for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub converged: bool,
    pub passes: usize,
    pub steps: usize,
    pub objective: f64,
    pub gap: f64,
    /// Multipliers for every training row, in row order.
    pub alpha: Vec<f64>,
}

pub fn train(matrix: &FeatureMatrix, columns: &[usize], hp: &SvmHyperparams) -> Result<SvmModel, SvmError> {
    train_with_report(matrix, columns, hp).map(|(model, _)| model)
}

pub fn train_with_report(
    matrix: &FeatureMatrix,
    columns: &[usize],
    hp: &SvmHyperparams,
) -> Result<(SvmModel, TrainReport), SvmError> {
    hp.validate()?;
    if matrix.n_rows() == 0 {
        return Err(SvmError::EmptyMatrix);
    }
    let mut columns = columns.to_vec();
    columns.sort_unstable();
    columns.dedup();
    if columns.is_empty() {
        return Err(SvmError::EmptyColumns);
    }
    let labels = matrix.labels();
    for label in Label::ALL {
        if labels.iter().all(|&l| l != label) {
            let present = if label == Label::Angry { Label::Relaxed } else { Label::Angry };
            return Err(SvmError::SingleClass(present));
        }
    }
    if matrix.rows().iter().any(|r| r.values.iter().any(|v| !v.is_finite())) {
        return Err(SvmError::NonFinite);
    }

    let normalizer = fit_normalizer(matrix, &columns)?;
    let points: Vec<Vec<f64>> = matrix.rows().iter().map(|r| normalizer.transform(&r.values)).collect();
    let gamma = match hp.gamma {
        Gamma::Fixed(g) => g,
        Gamma::Auto => auto_gamma(&points),
    };
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let kernel = KernelMatrix::from_fn(points.len(), |i, j| rbf(gamma, &points[i], &points[j]));
    let params = SmoParams { c: hp.c, tolerance: hp.tolerance, max_passes: hp.max_passes, seed: hp.seed };
    let sol = smo::solve(&kernel, &y, &params, &mut |_| {});

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(points[i].clone());
            dual_coefs.push(a * y[i]);
        }
    }
    let model =
        SvmModel { support_vectors, dual_coefs, bias: sol.bias, gamma, normalizer, input_width: matrix.n_cols() };
    let report = TrainReport {
        converged: sol.converged,
        passes: sol.passes,
        steps: sol.steps,
        objective: sol.objective,
        gap: sol.gap,
        alpha: sol.alpha,
    };
    Ok((model, report))
}

fn auto_gamma(points: &[Vec<f64>]) -> f64 {
    let d = points.first().map_or(1, Vec::len).max(1);
    let n = points.len() as f64;
    let mean_var = (0..d)
        .map(|j| {
            let m = points.iter().map(|p| p[j]).sum::<f64>() / n;
            points.iter().map(|p| (p[j] - m) * (p[j] - m)).sum::<f64>() / n
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}
