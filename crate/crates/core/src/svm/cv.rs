use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;
use crate::Label;

use super::{train, SvmError, SvmHyperparams};

/// Assigns each row a fold in `0..folds`.
///
/// Rows of each class are shuffled with `seed` and dealt round-robin, with the
/// deal continuing from one class to the next, so fold sizes differ by at most
/// one and every fold gets a near-proportional share of each class.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut dealt = 0;
    for class in Label::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = dealt % folds;
            dealt += 1;
        }
    }
    assignment
}

/// Mean accuracy over `hp.folds` stratified folds. Fold `f` trains with seed
/// `hp.seed + f`.
pub fn cross_validate(matrix: &FeatureMatrix, columns: &[usize], hp: &SvmHyperparams) -> Result<f64, SvmError> {
    hp.validate()?;
    let n = matrix.n_rows();
    if n < hp.folds {
        return Err(SvmError::TooFewRows { rows: n, folds: hp.folds });
    }
    let assignment = stratified_folds(&matrix.labels(), hp.folds, hp.seed);
    let mut total = 0.0;
    for fold in 0..hp.folds {
        let (test, train_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == fold);
        let model = train(&matrix.subset_rows(&train_idx), columns, &hp.with_seed(hp.seed.wrapping_add(fold as u64)))?;
        let mut correct = 0usize;
        for &i in &test {
            let row = &matrix.rows()[i];
            if model.predict(row)? == row.label {
                correct += 1;
            }
        }
        total += correct as f64 / test.len() as f64;
    }
    Ok(total / hp.folds as f64)
}
