//! Time-domain EMG features computed per time slot and assembled into a
//! slot-major feature matrix.
//!
//! Column `slot * 8 + kind.ordinal()` holds feature `kind` of slot `slot`, so
//! a 10-slot recording becomes an 80-column row.

use std::fmt;
use std::str::FromStr;

use crate::signal::{equal_ranges, SampleSeries, SlotPartition};
use crate::{Condition, Label};

pub const FEATURE_COUNT: usize = 8;
pub const DEFAULT_MAVSLP_SEGMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("slot is empty")]
    EmptySlot,
    #[error("{feature} needs at least {needed} samples, slot has {got}")]
    TooFewSamples { feature: FeatureKind, needed: usize, got: usize },
    #[error("MAVSLP needs at least 2 sub-segments, got {0}")]
    InvalidSegments(usize),
    #[error("slot partition covers {covered} samples but series has {len}")]
    PartitionMismatch { covered: usize, len: usize },
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },
    #[error("row length {0} is not a positive multiple of 8")]
    InvalidRowLength(usize),
    #[error("feature matrix has no rows")]
    EmptyMatrix,
    #[error("non-finite feature value in row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
}

/// The eight time-domain features. Ordinals are fixed and define the column
/// layout within a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    /// Maximum peak.
    Maxp = 0,
    /// Mean absolute value.
    Mav = 1,
    /// Mean absolute value slope.
    Mavslp = 2,
    /// Peaks above average.
    Paaf = 3,
    /// Root mean square.
    Rms = 4,
    /// Average amplitude change.
    Aac = 5,
    /// Difference absolute standard deviation value.
    Dasdv = 6,
    /// Waveform length.
    Wl = 7,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; FEATURE_COUNT] = [
        FeatureKind::Maxp,
        FeatureKind::Mav,
        FeatureKind::Mavslp,
        FeatureKind::Paaf,
        FeatureKind::Rms,
        FeatureKind::Aac,
        FeatureKind::Dasdv,
        FeatureKind::Wl,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            FeatureKind::Maxp => "MAXP",
            FeatureKind::Mav => "MAV",
            FeatureKind::Mavslp => "MAVSLP",
            FeatureKind::Paaf => "PAAF",
            FeatureKind::Rms => "RMS",
            FeatureKind::Aac => "AAC",
            FeatureKind::Dasdv => "DASDV",
            FeatureKind::Wl => "WL",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.symbol().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

fn require(x: &[f64], feature: FeatureKind, needed: usize) -> Result<(), FeatureError> {
    if x.is_empty() {
        return Err(FeatureError::EmptySlot);
    }
    if x.len() < needed {
        return Err(FeatureError::TooFewSamples { feature, needed, got: x.len() });
    }
    Ok(())
}

pub fn maxp(x: &[f64]) -> Result<f64, FeatureError> {
    require(x, FeatureKind::Maxp, 1)?;
    Ok(x.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn mav(x: &[f64]) -> Result<f64, FeatureError> {
    require(x, FeatureKind::Mav, 1)?;
    Ok(x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64)
}

/// Splits the slot into `sub_segments` parts (remainder in the last) and
/// returns the mean difference between MAVs of adjacent parts. The mean
/// telescopes to `(MAV_last - MAV_first) / (sub_segments - 1)`.
pub fn mavslp(x: &[f64], sub_segments: usize) -> Result<f64, FeatureError> {
    if sub_segments < 2 {
        return Err(FeatureError::InvalidSegments(sub_segments));
    }
    require(x, FeatureKind::Mavslp, sub_segments)?;
    let parts = equal_ranges(x.len(), sub_segments);
    let first = mav(&x[parts[0].clone()])?;
    let last = mav(&x[parts[sub_segments - 1].clone()])?;
    Ok((last - first) / (sub_segments - 1) as f64)
}

/// Number of strict local maxima lying above the slot mean.
pub fn paaf(x: &[f64]) -> Result<f64, FeatureError> {
    require(x, FeatureKind::Paaf, 3)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let peaks = x.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > mean).count();
    Ok(peaks as f64)
}

pub fn rms(x: &[f64]) -> Result<f64, FeatureError> {
    require(x, FeatureKind::Rms, 1)?;
    Ok((x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt())
}

pub fn aac(x: &[f64]) -> Result<f64, FeatureError> {
    require(x, FeatureKind::Aac, 2)?;
    Ok(wl(x)? / (x.len() - 1) as f64)
}

pub fn dasdv(x: &[f64]) -> Result<f64, FeatureError> {
    require(x, FeatureKind::Dasdv, 2)?;
    let sq: f64 = x.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    Ok((sq / (x.len() - 1) as f64).sqrt())
}

pub fn wl(x: &[f64]) -> Result<f64, FeatureError> {
    require(x, FeatureKind::Wl, 2)?;
    Ok(x.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub mavslp_segments: usize,
    /// Subtract the recording mean before extraction.
    pub center: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { mavslp_segments: DEFAULT_MAVSLP_SEGMENTS, center: false }
    }
}

/// All eight features of one slot, in ordinal order.
pub fn extract_slot(x: &[f64], opts: &ExtractOptions) -> Result<[f64; FEATURE_COUNT], FeatureError> {
    Ok([maxp(x)?, mav(x)?, mavslp(x, opts.mavslp_segments)?, paaf(x)?, rms(x)?, aac(x)?, dasdv(x)?, wl(x)?])
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance {
    pub user_id: String,
    pub condition: Condition,
}

/// One recording's features, slot-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Label,
    pub provenance: Provenance,
}

impl FeatureVector {
    pub fn slot_count(&self) -> usize {
        self.values.len() / FEATURE_COUNT
    }

    pub fn get(&self, slot: usize, kind: FeatureKind) -> Option<f64> {
        self.values.get(column_index(slot, kind)).copied()
    }
}

pub fn column_index(slot: usize, kind: FeatureKind) -> usize {
    slot * FEATURE_COUNT + kind.ordinal()
}

pub fn column_label(column: usize) -> (usize, FeatureKind) {
    (column / FEATURE_COUNT, FeatureKind::from_ordinal(column % FEATURE_COUNT).expect("ordinal < 8"))
}

pub fn extract_row(
    series: &SampleSeries,
    partition: &SlotPartition,
    label: Label,
    provenance: Provenance,
) -> Result<FeatureVector, FeatureError> {
    extract_row_with(series, partition, label, provenance, &ExtractOptions::default())
}

pub fn extract_row_with(
    series: &SampleSeries,
    partition: &SlotPartition,
    label: Label,
    provenance: Provenance,
    opts: &ExtractOptions,
) -> Result<FeatureVector, FeatureError> {
    if partition.covered_len() != series.len() {
        return Err(FeatureError::PartitionMismatch { covered: partition.covered_len(), len: series.len() });
    }
    let mut x = series.to_f64();
    if opts.center && !x.is_empty() {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
    }
    let mut values = Vec::with_capacity(partition.slot_count() * FEATURE_COUNT);
    for bounds in partition.slot_bounds() {
        values.extend_from_slice(&extract_slot(&x[bounds.clone()], opts)?);
    }
    Ok(FeatureVector { values, label, provenance })
}

/// Rows of equal length with their `(slot, kind)` column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<FeatureVector>,
    column_labels: Vec<(usize, FeatureKind)>,
}

pub fn build_matrix(rows: Vec<FeatureVector>) -> Result<FeatureMatrix, FeatureError> {
    let first = rows.first().ok_or(FeatureError::EmptyMatrix)?;
    let width = first.values.len();
    if width == 0 || width % FEATURE_COUNT != 0 {
        return Err(FeatureError::InvalidRowLength(width));
    }
    for (row, r) in rows.iter().enumerate() {
        if r.values.len() != width {
            return Err(FeatureError::RaggedRows { row, expected: width, got: r.values.len() });
        }
        if let Some(column) = r.values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { row, column });
        }
    }
    Ok(FeatureMatrix { column_labels: (0..width).map(column_label).collect(), rows })
}

impl FeatureMatrix {
    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn column_labels(&self) -> &[(usize, FeatureKind)] {
        &self.column_labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_labels.len()
    }

    pub fn slot_count(&self) -> usize {
        self.n_cols() / FEATURE_COUNT
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Distinct user ids, sorted.
    pub fn users(&self) -> Vec<String> {
        let mut users: Vec<String> = self.rows.iter().map(|r| r.provenance.user_id.clone()).collect();
        users.sort();
        users.dedup();
        users
    }

    /// Every column belonging to one of `kinds`, ascending.
    pub fn columns_for_kinds(&self, kinds: &[FeatureKind]) -> Vec<usize> {
        let mut cols: Vec<usize> =
            (0..self.slot_count()).flat_map(|slot| kinds.iter().map(move |&k| column_index(slot, k))).collect();
        cols.sort_unstable();
        cols
    }

    /// A new matrix with the rows at `indices`, in the given order.
    pub fn subset_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            column_labels: self.column_labels.clone(),
        }
    }

    /// Sorts rows by user id, then condition, then label.
    pub fn sort_by_provenance(&mut self) {
        self.rows.sort_by(|a, b| (&a.provenance, a.label).cmp(&(&b.provenance, b.label)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::partition_slots;

    #[test]
    fn maxp_examples() {
        assert_eq!(maxp(&[3.0, 9.0, 2.0]).unwrap(), 9.0);
        assert_eq!(maxp(&[4.0; 5]).unwrap(), 4.0);
        assert_eq!(maxp(&[]), Err(FeatureError::EmptySlot));
    }

    #[test]
    fn mav_examples() {
        assert_eq!(mav(&[1.0, -2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(mav(&[2.0, 4.0, 9.0]).unwrap(), 5.0);
    }

    #[test]
    fn mavslp_examples() {
        let x = [0.0, 0.0, 0.0, 3.0, 3.0, 3.0, 6.0, 6.0, 6.0];
        assert_eq!(mavslp(&x, 3).unwrap(), 3.0);
        assert_eq!(mavslp(&[5.0; 10], 3).unwrap(), 0.0);
        assert!(matches!(mavslp(&[1.0, 2.0], 3), Err(FeatureError::TooFewSamples { .. })));
        assert_eq!(mavslp(&[1.0, 2.0], 1), Err(FeatureError::InvalidSegments(1)));
    }

    #[test]
    fn paaf_examples() {
        assert_eq!(paaf(&[1.0, 5.0, 1.0, 5.0, 1.0]).unwrap(), 2.0);
        assert_eq!(paaf(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 0.0);
        assert_eq!(paaf(&[7.0; 6]).unwrap(), 0.0);
        // plateau peak does not count
        assert_eq!(paaf(&[0.0, 5.0, 5.0, 0.0]).unwrap(), 0.0);
        // local maximum below the mean does not count
        assert_eq!(paaf(&[0.0, 1.0, 0.0, 10.0, 10.0, 10.0]).unwrap(), 0.0);
        assert!(matches!(paaf(&[1.0, 2.0]), Err(FeatureError::TooFewSamples { .. })));
    }

    #[test]
    fn rms_examples() {
        assert!((rms(&[3.0, 4.0]).unwrap() - 3.535_533_905_932_737_6).abs() < 1e-15);
        assert_eq!(rms(&[6.0; 4]).unwrap(), 6.0);
    }

    #[test]
    fn difference_features() {
        assert_eq!(aac(&[0.0, 1.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(wl(&[0.0, 1.0, 0.0, 1.0]).unwrap(), 3.0);
        assert_eq!(dasdv(&[0.0, 2.0, 0.0]).unwrap(), 2.0);
        let ramp: Vec<f64> = (0..=17).map(f64::from).collect();
        assert_eq!(wl(&ramp).unwrap(), 17.0);
        for f in [aac, dasdv, wl] {
            assert_eq!(f(&[3.0; 5]).unwrap(), 0.0);
            assert!(matches!(f(&[1.0]), Err(FeatureError::TooFewSamples { .. })));
        }
    }

    #[test]
    fn column_layout_is_slot_major() {
        assert_eq!(column_index(0, FeatureKind::Maxp), 0);
        assert_eq!(column_index(3, FeatureKind::Wl), 31);
        for c in 0..80 {
            let (slot, kind) = column_label(c);
            assert_eq!(column_index(slot, kind), c);
        }
        assert_eq!("dasdv".parse::<FeatureKind>().unwrap(), FeatureKind::Dasdv);
    }

    #[test]
    fn constant_row_features() {
        let series = SampleSeries::new(100, vec![321; 200], 0).unwrap();
        let part = partition_slots(&series, 10).unwrap();
        let prov = Provenance { user_id: "u01".into(), condition: Condition::Open };
        let row = extract_row(&series, &part, Label::Angry, prov).unwrap();
        assert_eq!(row.values.len(), 80);
        for slot in row.values.chunks(8) {
            assert_eq!(slot, &[321.0, 321.0, 0.0, 0.0, 321.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn partition_must_match_series() {
        let a = SampleSeries::new(100, vec![1; 50], 0).unwrap();
        let b = SampleSeries::new(100, vec![1; 60], 0).unwrap();
        let part = partition_slots(&a, 5).unwrap();
        let prov = Provenance { user_id: "u".into(), condition: Condition::Fixed };
        assert!(matches!(extract_row(&b, &part, Label::Relaxed, prov), Err(FeatureError::PartitionMismatch { .. })));
    }

    #[test]
    fn build_matrix_rejects_ragged_rows() {
        let prov = Provenance { user_id: "u".into(), condition: Condition::Fixed };
        let row = |n| FeatureVector { values: vec![0.0; n], label: Label::Relaxed, provenance: prov.clone() };
        assert!(matches!(build_matrix(vec![row(16), row(8)]), Err(FeatureError::RaggedRows { row: 1, .. })));
        assert_eq!(build_matrix(vec![]), Err(FeatureError::EmptyMatrix));
        assert_eq!(build_matrix(vec![row(7)]), Err(FeatureError::InvalidRowLength(7)));
        let m = build_matrix(vec![row(16), row(16)]).unwrap();
        assert_eq!((m.n_rows(), m.n_cols(), m.slot_count()), (2, 16, 2));
        assert_eq!(m.columns_for_kinds(&[FeatureKind::Rms]), vec![4, 12]);
    }
}
