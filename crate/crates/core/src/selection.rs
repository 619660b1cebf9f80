//! Wrapper feature-subset search scored by cross-validated SVM accuracy.
//!
//! Two granularities are supported. `FeatureType` picks among the eight
//! feature kinds, where choosing a kind activates its column in every slot;
//! `Column` picks individual slot columns. Note that WL and AAC columns of the
//! same slot are exactly collinear (`wl = (N - 1) * aac`), so at column
//! granularity picking both adds no information.

use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;

use crate::features::{FeatureKind, FeatureMatrix, FEATURE_COUNT};
use crate::svm::{cross_validate, SvmError, SvmHyperparams};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectionError {
    #[error("k = {k} is outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("exhaustive search needs {combinations} subsets, budget is {budget}")]
    BudgetExceeded { combinations: u128, budget: u64 },
    #[error(transparent)]
    Svm(#[from] SvmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    FeatureType,
    Column,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::FeatureType => "type",
            Granularity::Column => "column",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Exhaustive,
    GreedyForward,
    /// Exhaustive when the subset count fits the budget, else greedy.
    Auto,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::GreedyForward => "greedy",
            Strategy::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionSpec {
    pub granularity: Granularity,
    pub k: usize,
    pub strategy: Strategy,
    pub budget: u64,
    /// Seed for the cross-validation folds used to score subsets.
    pub seed: u64,
    pub keep_log: bool,
}

impl Default for SelectionSpec {
    fn default() -> Self {
        Self {
            granularity: Granularity::FeatureType,
            k: DEFAULT_K,
            strategy: Strategy::Auto,
            budget: DEFAULT_BUDGET,
            seed: 0,
            keep_log: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Sorted feature-type ordinals or column indices.
    pub chosen: Vec<usize>,
    pub score: f64,
    pub evaluated_count: usize,
    pub strategy_used: Strategy,
    pub per_subset_log: Option<Vec<(Vec<usize>, f64)>>,
}

impl SelectionResult {
    /// Feature kinds of a type-level result.
    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.chosen.iter().filter_map(|&o| FeatureKind::from_ordinal(o)).collect()
    }
}

/// Number of selectable items at a granularity.
pub fn candidate_count(matrix: &FeatureMatrix, granularity: Granularity) -> usize {
    match granularity {
        Granularity::FeatureType => FEATURE_COUNT,
        Granularity::Column => matrix.n_cols(),
    }
}

/// Matrix columns activated by a chosen set.
pub fn active_columns(matrix: &FeatureMatrix, granularity: Granularity, chosen: &[usize]) -> Vec<usize> {
    match granularity {
        Granularity::FeatureType => {
            let kinds: Vec<FeatureKind> = chosen.iter().filter_map(|&o| FeatureKind::from_ordinal(o)).collect();
            matrix.columns_for_kinds(&kinds)
        }
        Granularity::Column => {
            let mut cols = chosen.to_vec();
            cols.sort_unstable();
            cols
        }
    }
}

/// `n choose k`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

// higher score first, then lexicographically smaller set
fn better(a: &(Vec<usize>, f64), b: &(Vec<usize>, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0))
}

fn score_all(
    matrix: &FeatureMatrix,
    spec: &SelectionSpec,
    hp: &SvmHyperparams,
    subsets: Vec<Vec<usize>>,
) -> Result<Vec<(Vec<usize>, f64)>, SvmError> {
    let cv_hp = hp.with_seed(spec.seed);
    subsets
        .into_par_iter()
        .map(|subset| {
            let cols = active_columns(matrix, spec.granularity, &subset);
            cross_validate(matrix, &cols, &cv_hp).map(|score| (subset, score))
        })
        .collect()
}

pub fn select_features(
    matrix: &FeatureMatrix,
    spec: &SelectionSpec,
    hp: &SvmHyperparams,
) -> Result<SelectionResult, SelectionError> {
    let n = candidate_count(matrix, spec.granularity);
    if spec.k == 0 || spec.k > n {
        return Err(SelectionError::KOutOfRange { k: spec.k, max: n });
    }
    let combinations = binomial(n, spec.k);
    let strategy = match spec.strategy {
        Strategy::Auto if combinations <= u128::from(spec.budget) => Strategy::Exhaustive,
        Strategy::Auto => Strategy::GreedyForward,
        Strategy::Exhaustive if combinations > u128::from(spec.budget) => {
            return Err(SelectionError::BudgetExceeded { combinations, budget: spec.budget })
        }
        s => s,
    };
    match strategy {
        Strategy::GreedyForward => greedy(matrix, spec, hp),
        _ => exhaustive(matrix, spec, hp, n),
    }
}

fn exhaustive(
    matrix: &FeatureMatrix,
    spec: &SelectionSpec,
    hp: &SvmHyperparams,
    n: usize,
) -> Result<SelectionResult, SelectionError> {
    let subsets: Vec<Vec<usize>> = (0..n).combinations(spec.k).collect();
    let scored = score_all(matrix, spec, hp, subsets)?;
    let (chosen, score) = scored.iter().min_by(|a, b| better(a, b)).cloned().expect("k <= n");
    Ok(SelectionResult {
        chosen,
        score,
        evaluated_count: scored.len(),
        strategy_used: Strategy::Exhaustive,
        per_subset_log: spec.keep_log.then_some(scored),
    })
}

fn greedy(
    matrix: &FeatureMatrix,
    spec: &SelectionSpec,
    hp: &SvmHyperparams,
) -> Result<SelectionResult, SelectionError> {
    let n = candidate_count(matrix, spec.granularity);
    let mut chosen: Vec<usize> = Vec::with_capacity(spec.k);
    let mut score = 0.0;
    let mut evaluated = 0;
    let mut log = Vec::new();
    for _ in 0..spec.k {
        let candidates: Vec<Vec<usize>> = (0..n)
            .filter(|c| !chosen.contains(c))
            .map(|c| {
                let mut s = chosen.clone();
                s.push(c);
                s.sort_unstable();
                s
            })
            .collect();
        let added: Vec<usize> = (0..n).filter(|c| !chosen.contains(c)).collect();
        let scored = score_all(matrix, spec, hp, candidates)?;
        evaluated += scored.len();
        // ties go to the smallest added index
        let best = scored
            .iter()
            .zip(&added)
            .min_by(|(a, ca), (b, cb)| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| ca.cmp(cb)))
            .map(|((subset, s), _)| (subset.clone(), *s))
            .expect("at least one candidate");
        chosen = best.0;
        score = best.1;
        if spec.keep_log {
            log.extend(scored);
        }
    }
    Ok(SelectionResult {
        chosen,
        score,
        evaluated_count: evaluated,
        strategy_used: Strategy::GreedyForward,
        per_subset_log: spec.keep_log.then_some(log),
    })
}

/// Runs the same search for each subset size in `ks`.
pub fn sweep_k(
    matrix: &FeatureMatrix,
    ks: &[usize],
    spec: &SelectionSpec,
    hp: &SvmHyperparams,
) -> Result<Vec<(usize, SelectionResult)>, SelectionError> {
    ks.iter().map(|&k| select_features(matrix, &SelectionSpec { k, ..*spec }, hp).map(|r| (k, r))).collect()
}
