//! Leave-one-user-out and 80-20 evaluation harnesses, confusion matrices and
//! the derived classification metrics.

use std::fmt;
use std::ops::AddAssign;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::FeatureMatrix;
use crate::selection::{active_columns, select_features, SelectionError, SelectionSpec};
use crate::svm::{train, SvmError, SvmHyperparams};
use crate::Label;

pub const DEFAULT_ITERATIONS: usize = 400;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("{rows} rows, need at least {needed}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("leave-one-user-out needs at least 2 users, found {0}")]
    TooFewUsers(usize),
    #[error("iteration count must be positive")]
    ZeroIterations,
    #[error("iteration {iteration} failed: {source}")]
    IterationFailure {
        iteration: usize,
        #[source]
        source: SelectionError,
    },
}

/// Counts with Angry as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Angry, Label::Angry) => self.tp += 1,
            (Label::Relaxed, Label::Angry) => self.fp += 1,
            (Label::Angry, Label::Relaxed) => self.fn_ += 1,
            (Label::Relaxed, Label::Relaxed) => self.tn += 1,
        }
    }

    /// P = TP + FN
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// N = FP + TN
    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    /// Angry-as-Relaxed over Relaxed-as-Angry confusions; `None` when no
    /// Relaxed row was called Angry.
    pub fn fn_fp_ratio(&self) -> Option<f64> {
        (self.fp > 0).then(|| self.fn_ as f64 / self.fp as f64)
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
        self.tn += rhs.tn;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Accuracy,
    Precision,
    Sensitivity,
    Specificity,
    FalsePositiveRate,
    FalseNegativeRate,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Sensitivity,
        Metric::Specificity,
        Metric::FalsePositiveRate,
        Metric::FalseNegativeRate,
        Metric::F1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "Accuracy",
            Metric::Precision => "Precision",
            Metric::Sensitivity => "Sensitivity",
            Metric::Specificity => "Specificity",
            Metric::FalsePositiveRate => "False Positive Rate",
            Metric::FalseNegativeRate => "False Negative Rate",
            Metric::F1 => "F1 Score",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Metric::Accuracy => "ACC = (TP + TN) / (P + N)",
            Metric::Precision => "PPV = TP / (TP + FP)",
            Metric::Sensitivity => "TPR = TP / (TP + FN)",
            Metric::Specificity => "SPC = TN / (FP + TN)",
            Metric::FalsePositiveRate => "FPR = FP / (FP + TN)",
            Metric::FalseNegativeRate => "FNR = FN / (FN + TP)",
            Metric::F1 => "F1 = 2TP / (2TP + FP + FN)",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The seven confusion-matrix statistics. A metric whose denominator is zero
/// is reported as 0 and listed in `degenerate`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub f1: f64,
    pub degenerate: Vec<Metric>,
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
            Metric::FalsePositiveRate => self.fpr,
            Metric::FalseNegativeRate => self.fnr,
            Metric::F1 => self.f1,
        }
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut degenerate = Vec::new();
    let mut ratio = |metric: Metric, num: u64, den: u64| {
        if den == 0 {
            degenerate.push(metric);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let (tp, fp, fn_, tn) = (cm.tp, cm.fp, cm.fn_, cm.tn);
    Ok(MetricsReport {
        accuracy: ratio(Metric::Accuracy, tp + tn, cm.total()),
        precision: ratio(Metric::Precision, tp, tp + fp),
        sensitivity: ratio(Metric::Sensitivity, tp, tp + fn_),
        specificity: ratio(Metric::Specificity, tn, fp + tn),
        fpr: ratio(Metric::FalsePositiveRate, fp, fp + tn),
        fnr: ratio(Metric::FalseNegativeRate, fn_, fn_ + tp),
        f1: ratio(Metric::F1, 2 * tp, 2 * tp + fp + fn_),
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMode {
    LeaveOneUserOut,
    Split8020,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::LeaveOneUserOut => "louo",
            EvalMode::Split8020 => "split8020",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPlan {
    pub mode: EvalMode,
    pub iterations: usize,
    pub seed: u64,
    pub selection: SelectionSpec,
    pub hp: SvmHyperparams,
    /// Re-run feature selection on each iteration's training rows. When
    /// false, features are selected once on the whole matrix.
    pub reselect_per_iteration: bool,
    pub stratify_split: bool,
}

impl EvalPlan {
    pub fn new(mode: EvalMode) -> Self {
        Self {
            mode,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            selection: SelectionSpec::default(),
            hp: SvmHyperparams::default(),
            reselect_per_iteration: true,
            stratify_split: true,
        }
    }
}

/// Row indices of a train/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn apply(&self, matrix: &FeatureMatrix) -> (FeatureMatrix, FeatureMatrix) {
        (matrix.subset_rows(&self.train), matrix.subset_rows(&self.test))
    }
}

pub fn louo_indices(matrix: &FeatureMatrix, user_id: &str) -> Result<SplitIndices, EvalError> {
    let (test, train): (Vec<usize>, Vec<usize>) =
        (0..matrix.n_rows()).partition(|&i| matrix.rows()[i].provenance.user_id == user_id);
    if test.is_empty() {
        return Err(EvalError::UnknownUser(user_id.to_string()));
    }
    Ok(SplitIndices { train, test })
}

/// Holds out every row of `user_id`.
pub fn split_louo(matrix: &FeatureMatrix, user_id: &str) -> Result<(FeatureMatrix, FeatureMatrix), EvalError> {
    Ok(louo_indices(matrix, user_id)?.apply(matrix))
}

/// `ceil(0.2 * n)`
pub fn test_size_8020(n: usize) -> usize {
    n.div_ceil(5)
}

pub fn split_8020_indices(labels: &[Label], seed: u64, stratify: bool) -> Result<SplitIndices, EvalError> {
    let n = labels.len();
    if n < 5 {
        return Err(EvalError::TooFewRows { rows: n, needed: 5 });
    }
    let test_n = test_size_8020(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::with_capacity(test_n);

    let classes: Vec<Vec<usize>> = Label::ALL.iter().map(|&c| (0..n).filter(|&i| labels[i] == c).collect()).collect();
    let quotas = stratified_quotas(&classes.iter().map(Vec::len).collect::<Vec<_>>(), test_n);
    let feasible = classes.iter().zip(&quotas).all(|(members, &q)| q < members.len() || members.is_empty());
    if stratify && feasible {
        for (mut members, q) in classes.into_iter().zip(quotas) {
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..q]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..test_n]);
    }
    test.sort_unstable();
    let train = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
    Ok(SplitIndices { train, test })
}

// largest-remainder apportionment of `total` across classes of the given sizes
fn stratified_quotas(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| s * total / n).collect();
    let mut remaining = total - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&c| std::cmp::Reverse((sizes[c] * total) % n));
    for c in order {
        if remaining == 0 {
            break;
        }
        quotas[c] += 1;
        remaining -= 1;
    }
    quotas
}

/// Samples `ceil(0.2 * N)` test rows, stratified by label when requested and
/// when every class keeps at least one training row.
pub fn split_8020(
    matrix: &FeatureMatrix,
    seed: u64,
    stratify: bool,
) -> Result<(FeatureMatrix, FeatureMatrix), EvalError> {
    Ok(split_8020_indices(&matrix.labels(), seed, stratify)?.apply(matrix))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub iteration: usize,
    /// Held-out user for leave-one-user-out iterations.
    pub test_user: Option<String>,
    /// Selected feature types or columns.
    pub chosen: Vec<usize>,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// Mean of the per-iteration accuracies.
    pub mean_accuracy: f64,
    pub iterations: Vec<IterationResult>,
}

impl EvalReport {
    pub fn per_iteration_accuracies(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.accuracy).collect()
    }
}

/// Runs `plan.iterations` independent train/test rounds.
///
/// Iteration `i` uses seed `plan.seed + i` for its split and SVM solver, and
/// `plan.selection.seed + i` for the folds that score feature subsets.
/// Leave-one-user-out iteration `i` holds out user `i mod U` (users sorted).
/// Iterations run on the current rayon pool; results are independent of the
/// pool size.
pub fn run_eval(matrix: &FeatureMatrix, plan: &EvalPlan) -> Result<EvalReport, EvalError> {
    if plan.iterations == 0 {
        return Err(EvalError::ZeroIterations);
    }
    let users = matrix.users();
    match plan.mode {
        EvalMode::LeaveOneUserOut if users.len() < 2 => return Err(EvalError::TooFewUsers(users.len())),
        EvalMode::Split8020 if matrix.n_rows() < 5 => {
            return Err(EvalError::TooFewRows { rows: matrix.n_rows(), needed: 5 })
        }
        _ => {}
    }

    let global = if plan.reselect_per_iteration {
        None
    } else {
        let chosen = select_features(matrix, &plan.selection, &plan.hp)
            .map_err(|source| EvalError::IterationFailure { iteration: 0, source })?
            .chosen;
        Some(chosen)
    };

    let results: Vec<IterationResult> = (0..plan.iterations)
        .into_par_iter()
        .map(|i| run_iteration(matrix, plan, &users, global.as_deref(), i))
        .collect::<Result<_, _>>()?;

    let mut confusion = ConfusionMatrix::default();
    for r in &results {
        confusion += r.confusion;
    }
    let mean_accuracy = results.iter().map(|r| r.accuracy).sum::<f64>() / results.len() as f64;
    Ok(EvalReport { metrics: metrics(&confusion)?, confusion, mean_accuracy, iterations: results })
}

fn run_iteration(
    matrix: &FeatureMatrix,
    plan: &EvalPlan,
    users: &[String],
    global: Option<&[usize]>,
    iteration: usize,
) -> Result<IterationResult, EvalError> {
    let seed = plan.seed.wrapping_add(iteration as u64);
    let (split, test_user) = match plan.mode {
        EvalMode::LeaveOneUserOut => {
            let user = &users[iteration % users.len()];
            (louo_indices(matrix, user)?, Some(user.clone()))
        }
        EvalMode::Split8020 => (split_8020_indices(&matrix.labels(), seed, plan.stratify_split)?, None),
    };
    let (train_m, test_m) = split.apply(matrix);
    let fail = |source: SelectionError| EvalError::IterationFailure { iteration, source };

    let chosen = match global {
        Some(c) => c.to_vec(),
        None => {
            let spec = SelectionSpec {
                seed: plan.selection.seed.wrapping_add(iteration as u64),
                keep_log: false,
                ..plan.selection
            };
            select_features(&train_m, &spec, &plan.hp).map_err(fail)?.chosen
        }
    };
    let columns = active_columns(matrix, plan.selection.granularity, &chosen);
    let model = train(&train_m, &columns, &plan.hp.with_seed(seed)).map_err(|e| fail(e.into()))?;

    let mut confusion = ConfusionMatrix::default();
    for row in test_m.rows() {
        let predicted = model.predict(row).map_err(|e: SvmError| fail(e.into()))?;
        confusion.record(row.label, predicted);
    }
    Ok(IterationResult {
        iteration,
        test_user,
        chosen,
        accuracy: confusion.correct() as f64 / confusion.total() as f64,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_matrix_metrics() {
        let m = metrics(&ConfusionMatrix::new(1, 0, 0, 1)).unwrap();
        assert_eq!((m.accuracy, m.precision, m.sensitivity, m.specificity, m.f1), (1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!((m.fpr, m.fnr), (0.0, 0.0));
        assert!(m.degenerate.is_empty());
    }

    #[test]
    fn degenerate_denominators_are_flagged() {
        let m = metrics(&ConfusionMatrix::new(0, 0, 0, 3)).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate.contains(&Metric::Precision));
        assert!(m.degenerate.contains(&Metric::Sensitivity));
        assert!(m.degenerate.contains(&Metric::FalseNegativeRate));
        assert!(m.degenerate.contains(&Metric::F1));
        assert!(!m.degenerate.contains(&Metric::Specificity));
        assert_eq!(metrics(&ConfusionMatrix::default()), Err(EvalError::EmptyMatrix));
    }

    #[test]
    fn records_by_actual_and_predicted() {
        let mut cm = ConfusionMatrix::default();
        cm.record(Label::Angry, Label::Angry);
        cm.record(Label::Relaxed, Label::Angry);
        cm.record(Label::Angry, Label::Relaxed);
        cm.record(Label::Relaxed, Label::Relaxed);
        cm.record(Label::Relaxed, Label::Relaxed);
        assert_eq!(cm, ConfusionMatrix::new(1, 1, 1, 2));
        assert_eq!(cm.fn_fp_ratio(), Some(1.0));
    }

    #[test]
    fn stratified_8020_split() {
        let labels: Vec<Label> = (0..40).map(|i| if i % 2 == 0 { Label::Angry } else { Label::Relaxed }).collect();
        let s = split_8020_indices(&labels, 9, true).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (32, 8));
        let angry = s.test.iter().filter(|&&i| labels[i] == Label::Angry).count();
        assert_eq!(angry, 4);
        assert_eq!(s, split_8020_indices(&labels, 9, true).unwrap());
        assert_ne!(s, split_8020_indices(&labels, 10, true).unwrap());
        assert!(matches!(split_8020_indices(&labels[..4], 0, true), Err(EvalError::TooFewRows { rows: 4, needed: 5 })));
    }

    #[test]
    fn quotas_sum_to_total() {
        assert_eq!(stratified_quotas(&[20, 20], 8), vec![4, 4]);
        assert_eq!(stratified_quotas(&[7, 3], 2), vec![1, 1]);
        assert_eq!(stratified_quotas(&[9, 1], 2), vec![2, 0]);
        assert_eq!(stratified_quotas(&[0, 5], 1), vec![0, 1]);
    }
}
