//! Recording-to-row feature pipeline: trim rest windows, cut slots, extract.

use rayon::prelude::*;

use crate::dataio::Recording;
use crate::features::{
    build_matrix, extract_row_with, ExtractOptions, FeatureError, FeatureMatrix, FeatureVector, Provenance,
};
use crate::signal::{
    partition_slots, trim_rest_windows, SignalError, DEFAULT_HEAD_S, DEFAULT_SLOT_COUNT, DEFAULT_TAIL_S,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("recording {index} ({user_id}): {source}")]
    Signal {
        index: usize,
        user_id: String,
        #[source]
        source: SignalError,
    },
    #[error("recording {index} ({user_id}): {source}")]
    Feature {
        index: usize,
        user_id: String,
        #[source]
        source: FeatureError,
    },
    #[error(transparent)]
    Matrix(FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub head_s: f64,
    pub tail_s: f64,
    pub slot_count: usize,
    pub extract: ExtractOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            head_s: DEFAULT_HEAD_S,
            tail_s: DEFAULT_TAIL_S,
            slot_count: DEFAULT_SLOT_COUNT,
            extract: ExtractOptions::default(),
        }
    }
}

/// Feature row of a single recording.
pub fn recording_features(rec: &Recording, opts: &PipelineOptions) -> Result<FeatureVector, PipelineError> {
    row_for(0, rec, opts)
}

fn row_for(index: usize, rec: &Recording, opts: &PipelineOptions) -> Result<FeatureVector, PipelineError> {
    let user_id = rec.meta.user_id.clone();
    let signal_err = |source| PipelineError::Signal { index, user_id: user_id.clone(), source };
    let trimmed = trim_rest_windows(&rec.series, opts.head_s, opts.tail_s).map_err(signal_err)?;
    let partition = partition_slots(&trimmed, opts.slot_count).map_err(signal_err)?;
    let provenance = Provenance { user_id: user_id.clone(), condition: rec.meta.condition };
    extract_row_with(&trimmed, &partition, rec.meta.label, provenance, &opts.extract)
        .map_err(|source| PipelineError::Feature { index, user_id: user_id.clone(), source })
}

/// Feature matrix of a corpus, rows sorted by user, condition, then label.
/// Rows are extracted in parallel.
pub fn extract_matrix(recordings: &[Recording], opts: &PipelineOptions) -> Result<FeatureMatrix, PipelineError> {
    let rows =
        recordings.par_iter().enumerate().map(|(i, rec)| row_for(i, rec, opts)).collect::<Result<Vec<_>, _>>()?;
    let mut matrix = build_matrix(rows).map_err(PipelineError::Matrix)?;
    matrix.sort_by_provenance();
    Ok(matrix)
}
