//! Seeded synthetic corpus shaped like the original study: each user
//! contributes fixed and open typing recordings in both emotional states.
//!
//! Every recording starts and ends with idle rest (no spikes, low noise) and
//! carries the labeled activity in between. Each recording's activity blends
//! the Relaxed and Angry presets at a random intensity drawn from a range per
//! label, and users differ by baseline offset, activity gain and spike rate,
//! so a tense Relaxed session from a loud user can look like a calm Angry one.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, SecondsFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::{write_manifest, write_recording, DataIoError, ManifestEntry, Recording, RecordingMeta};
use crate::signal::{
    generate_synthetic, SignalError, SynthProfile, DEFAULT_HEAD_S, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_TAIL_S,
};
use crate::{Condition, Label};

pub const MANIFEST_FILE: &str = "manifest.csv";
const EPOCH: &str = "2024-01-01T09:00:00Z";
pub const DEFAULT_RELAXED_INTENSITY: (f64, f64) = (0.0, 0.3);
pub const DEFAULT_ANGRY_INTENSITY: (f64, f64) = (0.5, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub users: usize,
    pub conditions: Vec<Condition>,
    /// Whole recording length, rest windows included.
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub head_rest_s: f64,
    pub tail_rest_s: f64,
    /// Range of the Relaxed-to-Angry blend drawn for Relaxed recordings;
    /// 0 is the Relaxed profile, 1 the Angry one.
    pub relaxed_intensity: (f64, f64),
    pub angry_intensity: (f64, f64),
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            users: 10,
            conditions: Condition::ALL.to_vec(),
            duration_s: 60.0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            head_rest_s: DEFAULT_HEAD_S,
            tail_rest_s: DEFAULT_TAIL_S,
            relaxed_intensity: DEFAULT_RELAXED_INTENSITY,
            angry_intensity: DEFAULT_ANGRY_INTENSITY,
            seed: 0,
        }
    }
}

/// `u01`, `u02`, ...
pub fn user_id(index: usize) -> String {
    format!("u{:02}", index + 1)
}

// SplitMix64 finalizer, used to derive independent child seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ p))
}

#[derive(Debug, Clone, Copy)]
struct UserTraits {
    baseline_offset: f64,
    gain: f64,
    rate_factor: f64,
}

fn user_traits(seed: u64, user: usize) -> UserTraits {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x75, user as u64]));
    UserTraits {
        baseline_offset: rng.random_range(-60.0..60.0),
        gain: rng.random_range(0.55..1.6),
        rate_factor: rng.random_range(0.45..1.7),
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// The labeled-activity profile of one recording: a blend of the Relaxed and
/// Angry presets at `intensity`, scaled by the user's traits.
fn activity_profile(
    traits: &UserTraits,
    condition: Condition,
    label: Label,
    intensity: f64,
    seed: u64,
) -> SynthProfile {
    let (calm, tense) = (SynthProfile::relaxed(seed), SynthProfile::angry(seed));
    let condition_factor = match condition {
        Condition::Fixed => 1.0,
        Condition::Open => 1.15,
    };
    SynthProfile {
        label,
        baseline: calm.baseline + traits.baseline_offset,
        noise_sd: lerp(calm.noise_sd, tense.noise_sd, intensity) * traits.gain,
        spike_rate_hz: lerp(calm.spike_rate_hz, tense.spike_rate_hz, intensity) * traits.rate_factor * condition_factor,
        spike_amplitude_mean: lerp(calm.spike_amplitude_mean, tense.spike_amplitude_mean, intensity) * traits.gain,
        spike_duration_ms: lerp(calm.spike_duration_ms, tense.spike_duration_ms, intensity),
        seed,
    }
}

/// Generates `users x conditions x 2` recordings in (user, condition, label)
/// order.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<Recording>, SignalError> {
    let active_s = spec.duration_s - spec.head_rest_s - spec.tail_rest_s;
    if !(active_s > 0.0 && spec.head_rest_s >= 0.0 && spec.tail_rest_s >= 0.0) {
        return Err(SignalError::InvalidDuration);
    }
    let valid = |(lo, hi): (f64, f64)| (0.0..=1.0).contains(&lo) && (lo..=1.0).contains(&hi);
    if !valid(spec.relaxed_intensity) || !valid(spec.angry_intensity) {
        return Err(SignalError::InvalidProfile("intensity ranges must satisfy 0 <= lo <= hi <= 1"));
    }
    let epoch = DateTime::parse_from_rfc3339(EPOCH).expect("valid epoch");
    let mut out = Vec::new();
    for user in 0..spec.users {
        let traits = user_traits(spec.seed, user);
        for (ci, &condition) in spec.conditions.iter().enumerate() {
            for label in Label::ALL {
                let key = [user as u64, condition as u64, label as u64];
                let seg_seed = |segment: u64| derive_seed(spec.seed, &[key[0], key[1], key[2], segment]);
                let rest = |segment| SynthProfile {
                    baseline: SynthProfile::rest(0).baseline + traits.baseline_offset,
                    ..SynthProfile::rest(seg_seed(segment))
                };
                let rate = spec.sample_rate_hz;
                let mut series = if spec.head_rest_s > 0.0 {
                    generate_synthetic(&rest(0), spec.head_rest_s, rate)?
                } else {
                    crate::signal::SampleSeries::new(rate, Vec::new(), 0)?
                };
                let (lo, hi) = match label {
                    Label::Relaxed => spec.relaxed_intensity,
                    Label::Angry => spec.angry_intensity,
                };
                let intensity = ChaCha8Rng::seed_from_u64(seg_seed(3)).random_range(lo..=hi);
                let activity = activity_profile(&traits, condition, label, intensity, seg_seed(1));
                series = series.concat(&generate_synthetic(&activity, active_s, rate)?)?;
                if spec.tail_rest_s > 0.0 {
                    series = series.concat(&generate_synthetic(&rest(2), spec.tail_rest_s, rate)?)?;
                }
                let slot = (user * spec.conditions.len() + ci) * 2 + label as usize;
                let started = epoch + Duration::minutes(5 * slot as i64);
                out.push(Recording {
                    meta: RecordingMeta::new(
                        user_id(user),
                        condition,
                        label,
                        started.to_utc().to_rfc3339_opts(SecondsFormat::Secs, true),
                    ),
                    series,
                });
            }
        }
    }
    Ok(out)
}

pub fn recording_file_name(meta: &RecordingMeta) -> String {
    format!("{}_{}_{}.csv", meta.user_id, meta.condition, meta.label)
}

/// Writes each recording plus `manifest.csv` into `dir` and returns the
/// manifest path.
pub fn write_corpus(recordings: &[Recording], dir: &Path, overwrite: bool) -> Result<PathBuf, DataIoError> {
    std::fs::create_dir_all(dir).map_err(|source| DataIoError::Io { path: dir.to_path_buf(), source })?;
    let mut entries = Vec::with_capacity(recordings.len());
    for rec in recordings {
        let name = recording_file_name(&rec.meta);
        write_recording(&rec.series, &rec.meta, &dir.join(&name), overwrite)?;
        entries.push(ManifestEntry {
            path: PathBuf::from(name),
            user_id: rec.meta.user_id.clone(),
            condition: rec.meta.condition,
            label: rec.meta.label,
        });
    }
    let manifest = dir.join(MANIFEST_FILE);
    write_manifest(&entries, &manifest, overwrite)?;
    Ok(manifest)
}
