//! Sample series, rest-window trimming, slot segmentation and a seeded
//! synthetic two-state EMG generator.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::Label;

/// Largest value the sensor ADC reports.
pub const MAX_SAMPLE_VALUE: u16 = 999;

pub const DEFAULT_HEAD_S: f64 = 10.0;
pub const DEFAULT_TAIL_S: f64 = 5.0;
pub const DEFAULT_SLOT_COUNT: usize = 10;
pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SignalError {
    #[error("sample rate must be at least 1 Hz")]
    ZeroSampleRate,
    #[error("sample {index} has value {value}, outside 0..=999")]
    ValueOutOfRange { index: usize, value: i64 },
    #[error("recording lasts {duration_s:.3} s, not longer than the {required_s:.3} s of rest windows")]
    DurationTooShort { duration_s: f64, required_s: f64 },
    #[error("rest window lengths must be finite and non-negative")]
    InvalidWindow,
    #[error("{got} samples cannot fill {needed} slots")]
    TooFewSamples { needed: usize, got: usize },
    #[error("slot count must be positive")]
    ZeroSlots,
    #[error("invalid synthetic profile: {0}")]
    InvalidProfile(&'static str),
    #[error("duration must be positive and finite")]
    InvalidDuration,
}

/// One recording: integer ADC counts at a fixed sample rate.
///
/// `start_offset_ms` is the time of the first sample relative to the start of
/// the original capture; trimming advances it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSeries {
    sample_rate_hz: u32,
    samples: Vec<u16>,
    start_offset_ms: u64,
}

impl SampleSeries {
    pub fn new(sample_rate_hz: u32, samples: Vec<u16>, start_offset_ms: u64) -> Result<Self, SignalError> {
        if sample_rate_hz == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, &v)| v > MAX_SAMPLE_VALUE) {
            return Err(SignalError::ValueOutOfRange { index, value: value.into() });
        }
        Ok(Self { sample_rate_hz, samples, start_offset_ms })
    }

    /// Builds a series from wider integers, rejecting anything outside `0..=999`.
    pub fn from_values(sample_rate_hz: u32, values: &[i64], start_offset_ms: u64) -> Result<Self, SignalError> {
        let mut samples = Vec::with_capacity(values.len());
        for (index, &value) in values.iter().enumerate() {
            if !(0..=i64::from(MAX_SAMPLE_VALUE)).contains(&value) {
                return Err(SignalError::ValueOutOfRange { index, value });
            }
            samples.push(value as u16);
        }
        Self::new(sample_rate_hz, samples, start_offset_ms)
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn start_offset_ms(&self) -> u64 {
        self.start_offset_ms
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Samples promoted to reals, the input type of every feature extractor.
    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&v| f64::from(v)).collect()
    }

    /// Concatenates `other` after `self`. Both must share a sample rate.
    pub fn concat(&self, other: &SampleSeries) -> Result<SampleSeries, SignalError> {
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(SignalError::InvalidProfile("concatenated series differ in sample rate"));
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Ok(SampleSeries { sample_rate_hz: self.sample_rate_hz, samples, start_offset_ms: self.start_offset_ms })
    }
}

/// Drops the idle head and tail of a recording.
///
/// Window lengths are given in seconds and converted with the series' own
/// rate, so the same call works for any sensor rate. Retained indices are
/// `[round(head_s * rate), N - round(tail_s * rate))`.
pub fn trim_rest_windows(series: &SampleSeries, head_s: f64, tail_s: f64) -> Result<SampleSeries, SignalError> {
    if !(head_s.is_finite() && tail_s.is_finite() && head_s >= 0.0 && tail_s >= 0.0) {
        return Err(SignalError::InvalidWindow);
    }
    let rate = f64::from(series.sample_rate_hz);
    let duration_s = series.duration_s();
    let too_short = SignalError::DurationTooShort { duration_s, required_s: head_s + tail_s };
    if duration_s <= head_s + tail_s {
        return Err(too_short);
    }
    let head = (head_s * rate).round() as usize;
    let tail = (tail_s * rate).round() as usize;
    let n = series.len();
    if head + tail >= n {
        return Err(too_short);
    }
    let end = n - tail;
    let shift_ms = (head as u64 * 1000 + u64::from(series.sample_rate_hz) / 2) / u64::from(series.sample_rate_hz);
    Ok(SampleSeries {
        sample_rate_hz: series.sample_rate_hz,
        samples: series.samples[head..end].to_vec(),
        start_offset_ms: series.start_offset_ms + shift_ms,
    })
}

/// Contiguous half-open index ranges covering a series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPartition {
    slot_count: usize,
    slot_bounds: Vec<Range<usize>>,
}

impl SlotPartition {
    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    pub fn slot_bounds(&self) -> &[Range<usize>] {
        &self.slot_bounds
    }

    /// Total number of samples covered.
    pub fn covered_len(&self) -> usize {
        self.slot_bounds.last().map_or(0, |r| r.end)
    }
}

/// Splits `len` items into `count` contiguous ranges of `len / count` items,
/// with the remainder appended to the last range.
pub fn equal_ranges(len: usize, count: usize) -> Vec<Range<usize>> {
    if count == 0 {
        return Vec::new();
    }
    let width = len / count;
    (0..count)
        .map(|i| {
            let start = i * width;
            let end = if i + 1 == count { len } else { start + width };
            start..end
        })
        .collect()
}

pub fn partition_slots(series: &SampleSeries, slot_count: usize) -> Result<SlotPartition, SignalError> {
    if slot_count == 0 {
        return Err(SignalError::ZeroSlots);
    }
    if series.len() < slot_count {
        return Err(SignalError::TooFewSamples { needed: slot_count, got: series.len() });
    }
    Ok(SlotPartition { slot_count, slot_bounds: equal_ranges(series.len(), slot_count) })
}

/// Parameters of the synthetic two-state EMG model: a baseline with Gaussian
/// noise plus Poisson-arriving spikes that decay exponentially.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    pub label: Label,
    /// Resting level in ADC counts.
    pub baseline: f64,
    pub noise_sd: f64,
    pub spike_rate_hz: f64,
    /// Mean of the exponentially distributed spike peak height.
    pub spike_amplitude_mean: f64,
    pub spike_duration_ms: f64,
    pub seed: u64,
}

impl SynthProfile {
    pub fn relaxed(seed: u64) -> Self {
        Self {
            label: Label::Relaxed,
            baseline: 150.0,
            noise_sd: 10.0,
            spike_rate_hz: 0.5,
            spike_amplitude_mean: 80.0,
            spike_duration_ms: 60.0,
            seed,
        }
    }

    pub fn angry(seed: u64) -> Self {
        Self {
            label: Label::Angry,
            baseline: 150.0,
            noise_sd: 28.0,
            spike_rate_hz: 2.5,
            spike_amplitude_mean: 220.0,
            spike_duration_ms: 120.0,
            seed,
        }
    }

    pub fn for_label(label: Label, seed: u64) -> Self {
        match label {
            Label::Relaxed => Self::relaxed(seed),
            Label::Angry => Self::angry(seed),
        }
    }

    /// Idle muscle before and after typing: low noise, no spikes.
    pub fn rest(seed: u64) -> Self {
        Self {
            label: Label::Relaxed,
            baseline: 150.0,
            noise_sd: 6.0,
            spike_rate_hz: 0.0,
            spike_amplitude_mean: 0.0,
            spike_duration_ms: 50.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !self.baseline.is_finite() {
            return Err(SignalError::InvalidProfile("baseline must be finite"));
        }
        if !non_negative(self.noise_sd) {
            return Err(SignalError::InvalidProfile("noise_sd must be finite and >= 0"));
        }
        if !non_negative(self.spike_rate_hz) {
            return Err(SignalError::InvalidProfile("spike_rate_hz must be finite and >= 0"));
        }
        if !non_negative(self.spike_amplitude_mean) {
            return Err(SignalError::InvalidProfile("spike_amplitude_mean must be finite and >= 0"));
        }
        if !(self.spike_duration_ms.is_finite() && self.spike_duration_ms > 0.0) {
            return Err(SignalError::InvalidProfile("spike_duration_ms must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Spike {
    start: u64,
    amplitude: f64,
}

/// Streaming form of the synthetic model, one sample per `next()`.
///
/// Noise and spike arrivals draw from separate seeded streams so that the
/// spike train does not depend on how many noise draws preceded it.
#[derive(Debug, Clone)]
pub struct SynthGenerator {
    profile: SynthProfile,
    sample_rate_hz: u32,
    noise_rng: ChaCha8Rng,
    spike_rng: ChaCha8Rng,
    index: u64,
    next_spike_s: f64,
    active: Vec<Spike>,
    spike_len: u64,
    decay_samples: f64,
}

impl SynthGenerator {
    pub fn new(profile: SynthProfile, sample_rate_hz: u32) -> Result<Self, SignalError> {
        profile.validate()?;
        if sample_rate_hz == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        let mut spike_rng = ChaCha8Rng::seed_from_u64(profile.seed);
        spike_rng.set_stream(1);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(profile.seed);
        noise_rng.set_stream(2);
        let rate = f64::from(sample_rate_hz);
        let spike_len = ((profile.spike_duration_ms / 1000.0 * rate).round() as u64).max(1);
        let mut generator = Self {
            profile,
            sample_rate_hz,
            noise_rng,
            spike_rng,
            index: 0,
            next_spike_s: f64::INFINITY,
            active: Vec::new(),
            spike_len,
            decay_samples: (spike_len as f64 / 3.0).max(0.5),
        };
        generator.next_spike_s = generator.draw_interarrival();
        Ok(generator)
    }

    pub fn profile(&self) -> &SynthProfile {
        &self.profile
    }

    fn draw_interarrival(&mut self) -> f64 {
        if self.profile.spike_rate_hz <= 0.0 {
            return f64::INFINITY;
        }
        let e: f64 = self.spike_rng.sample(Exp1);
        e / self.profile.spike_rate_hz
    }

    fn next_value(&mut self) -> u16 {
        let t = self.index as f64 / f64::from(self.sample_rate_hz);
        while self.next_spike_s <= t {
            let height: f64 = self.spike_rng.sample(Exp1);
            self.active.push(Spike { start: self.index, amplitude: height * self.profile.spike_amplitude_mean });
            self.next_spike_s += self.draw_interarrival();
        }
        let index = self.index;
        let spike_len = self.spike_len;
        self.active.retain(|s| index - s.start < spike_len);
        let spikes: f64 =
            self.active.iter().map(|s| s.amplitude * (-((index - s.start) as f64) / self.decay_samples).exp()).sum();
        let z: f64 = self.noise_rng.sample(StandardNormal);
        self.index += 1;
        let value = self.profile.baseline + self.profile.noise_sd * z + spikes;
        value.round().clamp(0.0, f64::from(MAX_SAMPLE_VALUE)) as u16
    }
}

impl Iterator for SynthGenerator {
    type Item = u16;

    fn next(&mut self) -> Option<u16> {
        Some(self.next_value())
    }
}

/// Generates `round(duration_s * sample_rate_hz)` samples from `profile`.
pub fn generate_synthetic(
    profile: &SynthProfile,
    duration_s: f64,
    sample_rate_hz: u32,
) -> Result<SampleSeries, SignalError> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(SignalError::InvalidDuration);
    }
    let n = (duration_s * f64::from(sample_rate_hz)).round() as usize;
    let samples = SynthGenerator::new(*profile, sample_rate_hz)?.take(n).collect();
    SampleSeries::new(sample_rate_hz, samples, 0)
}
