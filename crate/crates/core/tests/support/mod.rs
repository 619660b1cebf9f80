//! Reference oracles and fixtures shared by the integration tests.
//!
//! Everything here is written against plain slices and nested vectors so it
//! does not lean on the code under test.
#![allow(dead_code)]

use emg_affect::features::{build_matrix, FeatureMatrix, FeatureVector, Provenance, FEATURE_COUNT};
use emg_affect::svm::SvmModel;
use emg_affect::{Condition, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Proptest settings with a fixed seed and no on-disk regression files.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x00E3_6AFF),
        ..Default::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Builds a matrix from `(values, label, user)` rows. Rows are zero-padded to
/// the next multiple of 8 columns.
pub fn matrix_with_users(rows: &[(Vec<f64>, Label, String)]) -> FeatureMatrix {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(1).div_ceil(FEATURE_COUNT) * FEATURE_COUNT;
    let vectors = rows
        .iter()
        .map(|(values, label, user)| {
            let mut values = values.clone();
            values.resize(width, 0.0);
            FeatureVector {
                values,
                label: *label,
                provenance: Provenance { user_id: user.clone(), condition: Condition::Fixed },
            }
        })
        .collect();
    build_matrix(vectors).expect("well-formed rows")
}

/// Like [`matrix_with_users`] with one user per row.
pub fn matrix_from(rows: &[(Vec<f64>, Label)]) -> FeatureMatrix {
    let rows: Vec<_> = rows.iter().enumerate().map(|(i, (v, l))| (v.clone(), *l, format!("r{i:04}"))).collect();
    matrix_with_users(&rows)
}

pub fn label_of(sign: bool) -> Label {
    if sign {
        Label::Angry
    } else {
        Label::Relaxed
    }
}

// ---------------------------------------------------------------- SVM dual

/// `sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Brute-force maximizer of the dual: every `a_1..a_{n-1}` on a grid of
/// `step` over `[0, C]`, with the last multiplier fixed by the equality
/// constraint and discarded when it leaves the box.
pub fn grid_dual_oracle(k: &[Vec<f64>], y: &[f64], c: f64, step: f64) -> f64 {
    let n = y.len();
    let ticks = (c / step).round() as usize;
    let grid: Vec<f64> = (0..=ticks).map(|t| (t as f64 * step).min(c)).collect();
    let mut idx = vec![0usize; n - 1];
    let mut alpha = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut s = 0.0;
        for i in 0..n - 1 {
            alpha[i] = grid[idx[i]];
            s += alpha[i] * y[i];
        }
        let last = -s * y[n - 1];
        if (-1e-12..=c + 1e-12).contains(&last) {
            alpha[n - 1] = last.clamp(0.0, c);
            best = best.max(dual_objective(k, y, &alpha));
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == n - 1 {
                return best;
            }
            idx[d] += 1;
            if idx[d] <= ticks {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Exact maximizer of the dual for small `n`: enumerates every assignment of
/// each multiplier to `0`, `C` or free, solves the equality-constrained
/// stationarity system on the free set, and keeps the best feasible point.
/// Returns `(objective, alpha)`.
pub fn active_set_dual_oracle(k: &[Vec<f64>], y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            // [Q_FF y_F; y_F^T 0] [a_F; b] = [1 - Q_FB a_B; -y_B^T a_B]
            let m = free.len() + 1;
            let mut a = vec![vec![0.0; m + 1]; m];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = y[i] * y[j] * k[i][j];
                }
                a[r][m - 1] = y[i];
                let mut rhs = 1.0;
                for j in 0..n {
                    if state[j] != 2 {
                        rhs -= y[i] * y[j] * k[i][j] * alpha[j];
                    }
                }
                a[r][m] = rhs;
            }
            for (s, &j) in free.iter().enumerate() {
                a[m - 1][s] = y[j];
            }
            a[m - 1][m] = -(0..n).filter(|&j| state[j] != 2).map(|j| y[j] * alpha[j]).sum::<f64>();
            let Some(sol) = gauss_solve(a) else { continue };
            for (s, &i) in free.iter().enumerate() {
                alpha[i] = sol[s];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-9..=c + 1e-9).contains(&a))
            && alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if feasible {
            let w = dual_objective(k, y, &alpha);
            if w > best.0 {
                best = (w, alpha);
            }
        }
    }
    best
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    Some((0..m).map(|r| a[r][m] / a[r][r]).collect())
}

/// Largest violation of the soft-margin KKT conditions:
/// `a = 0 => y f >= 1`, `0 < a < C => y f = 1`, `a = C => y f <= 1`,
/// where `f(x_i) = sum_j a_j y_j K_ij + b`.
pub fn kkt_violation(k: &[Vec<f64>], y: &[f64], alpha: &[f64], bias: f64, c: f64) -> f64 {
    let n = y.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k[i][j]).sum::<f64>() + bias;
        let margin = y[i] * f;
        let v = if alpha[i] <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if alpha[i] >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// A random 6-point, 2-D instance with both labels present.
pub struct DualInstance {
    pub points: Vec<[f64; 2]>,
    pub y: Vec<f64>,
    pub gamma: f64,
}

impl DualInstance {
    pub fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        loop {
            let points: Vec<[f64; 2]> =
                (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            if y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0) {
                let gamma = rng.random_range(0.5..4.0);
                return Self { points, y, gamma };
            }
        }
    }

    pub fn kernel(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|a| {
                self.points
                    .iter()
                    .map(|b| {
                        let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
                        (-self.gamma * d2).exp()
                    })
                    .collect()
            })
            .collect()
    }
}

// ---------------------------------------------------------------- features

pub fn mav_oracle(x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in (0..x.len()).rev() {
        total += if x[i] < 0.0 { -x[i] } else { x[i] };
    }
    total / x.len() as f64
}

/// Mean of the differences between adjacent sub-segment MAVs, computed one
/// difference at a time.
pub fn mavslp_oracle(x: &[f64], segments: usize) -> f64 {
    let base = x.len() / segments;
    let mut mavs = Vec::with_capacity(segments);
    for s in 0..segments {
        let start = s * base;
        let end = if s + 1 == segments { x.len() } else { start + base };
        mavs.push(mav_oracle(&x[start..end]));
    }
    let diffs: Vec<f64> = mavs.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.iter().sum::<f64>() / diffs.len() as f64
}

/// `sqrt(mean^2 + population variance)`, with the variance from a second pass.
pub fn rms_two_pass(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean * mean + var).sqrt()
}

// ---------------------------------------------------------------- models

/// Decision value recomputed from the model's stored parts.
pub fn decision_oracle(model: &SvmModel, row: &[f64]) -> f64 {
    let norm = model.normalizer();
    let u: Vec<f64> = norm
        .columns()
        .iter()
        .enumerate()
        .map(|(j, &c)| if norm.sd()[j] == 0.0 { 0.0 } else { (row[c] - norm.mean()[j]) / norm.sd()[j] })
        .collect();
    let mut total = model.bias();
    for (sv, coef) in model.support_vectors().iter().zip(model.dual_coefs()) {
        let mut d2 = 0.0;
        for j in 0..u.len() {
            d2 += (sv[j] - u[j]) * (sv[j] - u[j]);
        }
        total += coef * (-model.gamma() * d2).exp();
    }
    total
}

// ---------------------------------------------------------------- files

/// Generators for file round-trip fuzzing.
pub mod files {
    use std::collections::BTreeMap;

    use emg_affect::dataio::{DataIoError, RecordingMeta};
    use emg_affect::signal::SampleSeries;
    use emg_affect::svm::{Normalizer, SvmModel};
    use emg_affect::{Condition, Label};
    use proptest::prelude::*;

    pub fn token() -> impl Strategy<Value = String> {
        "[A-Za-z0-9_.-]{1,12}"
    }

    pub fn meta() -> impl Strategy<Value = RecordingMeta> {
        (
            token(),
            prop_oneof![Just(Condition::Fixed), Just(Condition::Open)],
            prop_oneof![Just(Label::Relaxed), Just(Label::Angry)],
            0i64..4_000_000_000,
            prop::collection::btree_map("[a-z][a-z_]{0,8}", "[ -~]{0,16}", 0..3),
        )
            .prop_map(|(user, condition, label, secs, extras)| {
                let started = chrono::DateTime::from_timestamp(secs, 0).unwrap();
                let mut m = RecordingMeta::new(
                    user,
                    condition,
                    label,
                    started.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                );
                m.extras = extras
                    .into_iter()
                    .filter(|(k, _)| {
                        !["user_id", "condition", "label", "sample_rate_hz", "started_at"].contains(&k.as_str())
                    })
                    .collect::<BTreeMap<_, _>>();
                m
            })
    }

    pub fn series() -> impl Strategy<Value = SampleSeries> {
        (1u32..=1000, prop::collection::vec(0u16..=999, 0..400), 0u64..10_000_000).prop_map(|(rate, samples, start)| {
            // an empty body has no timestamp to carry the offset
            let start = if samples.is_empty() { 0 } else { start };
            SampleSeries::new(rate, samples, start).unwrap()
        })
    }

    /// Any finite double, including subnormals and extreme exponents.
    pub fn real() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            -1e3f64..1e3,
            Just(0.0),
            Just(-0.0),
            Just(f64::MIN_POSITIVE / 4.0),
        ]
    }

    pub fn model() -> impl Strategy<Value = SvmModel> {
        (1usize..6, 0usize..8, 1usize..4).prop_flat_map(|(d, n_sv, width_slots)| {
            let width = width_slots * 8;
            (
                prop::collection::btree_set(0..width, d..=d),
                prop::collection::vec(real(), d),
                prop::collection::vec(real().prop_map(f64::abs), d),
                prop::collection::vec(prop::collection::vec(real(), d), n_sv),
                prop::collection::vec(real(), n_sv),
                real(),
                (1e-300f64..1e300),
            )
                .prop_map(move |(cols, mean, sd, svs, coefs, bias, gamma)| {
                    let norm = Normalizer::from_parts(cols.into_iter().collect(), mean, sd).unwrap();
                    SvmModel::from_parts(svs, coefs, bias, gamma, norm, width).unwrap()
                })
        })
    }

    pub fn bits(values: &[f64]) -> Vec<u64> {
        values.iter().map(|v| v.to_bits()).collect()
    }

    pub fn assert_same_model(a: &SvmModel, b: &SvmModel) {
        assert_eq!(a.gamma().to_bits(), b.gamma().to_bits());
        assert_eq!(a.bias().to_bits(), b.bias().to_bits());
        assert_eq!(a.input_width(), b.input_width());
        assert_eq!(a.active_columns(), b.active_columns());
        assert_eq!(bits(a.normalizer().mean()), bits(b.normalizer().mean()));
        assert_eq!(bits(a.normalizer().sd()), bits(b.normalizer().sd()));
        assert_eq!(bits(a.dual_coefs()), bits(b.dual_coefs()));
        let sa: Vec<_> = a.support_vectors().iter().map(|v| bits(v)).collect();
        let sb: Vec<_> = b.support_vectors().iter().map(|v| bits(v)).collect();
        assert_eq!(sa, sb);
    }

    /// Typed parse failures carry a line number; the version check is the one
    /// failure that applies to the whole file.
    pub fn is_typed(e: &DataIoError) -> bool {
        e.line().is_some() || matches!(e, DataIoError::VersionMismatch { .. })
    }

    /// Deterministic corruption of a valid file.
    pub fn mutate(text: &str, op: u8, at: usize, byte: u8) -> String {
        let mut bytes = text.as_bytes().to_vec();
        if bytes.is_empty() {
            return String::from_utf8_lossy(&[byte]).into_owned();
        }
        let i = at % bytes.len();
        match op % 5 {
            0 => bytes[i] = byte,
            1 => {
                bytes.remove(i);
            }
            2 => bytes.insert(i, byte),
            3 => bytes.truncate(i),
            _ => {
                let lines: Vec<&str> = text.split('\n').collect();
                let drop = at % lines.len();
                return lines
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != drop)
                    .map(|(_, l)| *l)
                    .collect::<Vec<_>>()
                    .join("\n");
            }
        }
        String::from_utf8_lossy(&bytes).into_owned()
    }
}
