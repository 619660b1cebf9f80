//! The capture protocol as a synchronous state machine.
//!
//! Time is the sample clock: the timestamp of the next sample is
//! `samples * 1000 / rate` ms after the session started, and every phase
//! boundary falls on a sample count. Phase lengths in the stored recording are
//! therefore exact to the sample regardless of source jitter.

use std::collections::BTreeMap;
use std::fmt;

use emg_affect::dataio::{sample_timestamp_ms, KeyEvent, RecordingMeta};
use emg_affect::signal::SampleSeries;
use emg_affect::Condition;
use serde::{Deserialize, Serialize};

use crate::config::SessionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Created,
    PreRest,
    Typing,
    PostRest,
    Finished,
    Aborted,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Created => "created",
            Phase::PreRest => "pre_rest",
            Phase::Typing => "typing",
            Phase::PostRest => "post_rest",
            Phase::Finished => "finished",
            Phase::Aborted => "aborted",
        }
    }

    /// Samples are being recorded.
    pub fn is_recording(self) -> bool {
        matches!(self, Phase::PreRest | Phase::Typing | Phase::PostRest)
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Finished | Phase::Aborted)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot {action} while the session is {phase}")]
pub struct InvalidPhase {
    pub action: &'static str,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseMark {
    pub phase: Phase,
    pub at_ms: u64,
}

/// Why the typing phase ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypingEnd {
    TextMatched,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyStroke {
    pub t_ms: u64,
    pub key: String,
}

/// Point-in-time view of a session, as served by `GET /sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub phase: Phase,
    pub phase_entered_at_ms: u64,
    pub clock_ms: u64,
    pub remaining_s: f64,
    pub samples_so_far: u64,
    pub dropped_frames: u64,
    pub typed_text: String,
    pub keystrokes: Vec<KeyStroke>,
    pub timeline: Vec<PhaseMark>,
    pub typing_end: Option<TypingEnd>,
    pub abort_reason: Option<String>,
    pub recording_path: Option<String>,
    pub config: SessionConfig,
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    phase: Phase,
    samples: Vec<u16>,
    phase_start: u64,
    timeline: Vec<PhaseMark>,
    keystrokes: Vec<KeyStroke>,
    typed: String,
    dropped_frames: u64,
    typing_end: Option<TypingEnd>,
    abort_reason: Option<String>,
    started_at: Option<String>,
    pre_len: u64,
    typing_len: u64,
    post_len: u64,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, String> {
        config.validate()?;
        let typing_s = match config.condition {
            Condition::Open => config.typing_limit_s,
            Condition::Fixed => config.fixed_time_cap_s,
        };
        Ok(Self {
            pre_len: config.samples_for(config.pre_rest_s),
            typing_len: config.samples_for(typing_s).max(1),
            post_len: config.samples_for(config.post_rest_s),
            config,
            phase: Phase::Created,
            samples: Vec::new(),
            phase_start: 0,
            timeline: vec![PhaseMark { phase: Phase::Created, at_ms: 0 }],
            keystrokes: Vec::new(),
            typed: String::new(),
            dropped_frames: 0,
            typing_end: None,
            abort_reason: None,
            started_at: None,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn keystrokes(&self) -> &[KeyStroke] {
        &self.keystrokes
    }

    pub fn timeline(&self) -> &[PhaseMark] {
        &self.timeline
    }

    pub fn typed_text(&self) -> &str {
        &self.typed
    }

    pub fn dropped_frames(&self) -> u64 {
        self.dropped_frames
    }

    pub fn abort_reason(&self) -> Option<&str> {
        self.abort_reason.as_deref()
    }

    /// Session time of the next sample.
    pub fn clock_ms(&self) -> u64 {
        self.ms_at(self.samples.len() as u64)
    }

    fn ms_at(&self, sample: u64) -> u64 {
        sample_timestamp_ms(0, sample as usize, self.config.sample_rate_hz)
    }

    fn phase_len(&self) -> Option<u64> {
        match self.phase {
            Phase::PreRest => Some(self.pre_len),
            Phase::Typing => Some(self.typing_len),
            Phase::PostRest => Some(self.post_len),
            _ => None,
        }
    }

    /// Seconds left in the current phase on the sample clock.
    pub fn remaining_s(&self) -> f64 {
        match self.phase_len() {
            Some(len) => {
                let done = self.samples.len() as u64 - self.phase_start;
                len.saturating_sub(done) as f64 / f64::from(self.config.sample_rate_hz)
            }
            None => 0.0,
        }
    }

    /// Enters PreRest. `started_at` is the wall-clock start as ISO-8601.
    pub fn start(&mut self, started_at: impl Into<String>) -> Result<(), InvalidPhase> {
        if self.phase != Phase::Created {
            return Err(InvalidPhase { action: "start", phase: self.phase });
        }
        self.started_at = Some(started_at.into());
        self.enter(Phase::PreRest);
        self.settle();
        Ok(())
    }

    fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.phase_start = self.samples.len() as u64;
        self.timeline.push(PhaseMark { phase, at_ms: self.clock_ms() });
    }

    /// Advances through every phase whose sample budget is already spent.
    fn settle(&mut self) {
        while let Some(len) = self.phase_len() {
            if (self.samples.len() as u64 - self.phase_start) < len {
                break;
            }
            let next = match self.phase {
                Phase::PreRest => Phase::Typing,
                Phase::Typing => {
                    self.typing_end.get_or_insert(TypingEnd::TimeLimit);
                    Phase::PostRest
                }
                _ => Phase::Finished,
            };
            self.enter(next);
        }
    }

    /// Records one sample. Samples outside the recording phases are dropped
    /// and `false` is returned.
    pub fn push_sample(&mut self, value: u16) -> bool {
        if !self.phase.is_recording() {
            return false;
        }
        self.samples.push(value);
        self.settle();
        true
    }

    /// Counts a frame the source could not decode.
    pub fn note_dropped_frame(&mut self) {
        if self.phase.is_recording() {
            self.dropped_frames += 1;
        }
    }

    /// Records a keystroke at the current sample clock and returns its
    /// timestamp. `Backspace` deletes, `Enter` types a newline, any single
    /// character types itself; other named keys are logged only. In Fixed
    /// mode an exact match with the script ends the typing phase.
    pub fn key(&mut self, key: &str) -> Result<u64, InvalidPhase> {
        if self.phase != Phase::Typing {
            return Err(InvalidPhase { action: "record keys", phase: self.phase });
        }
        let t_ms = self.clock_ms();
        self.keystrokes.push(KeyStroke { t_ms, key: key.to_owned() });
        let mut chars = key.chars();
        match (key, chars.next(), chars.next()) {
            ("Backspace", ..) => {
                self.typed.pop();
            }
            ("Enter", ..) => self.typed.push('\n'),
            (_, Some(c), None) => self.typed.push(c),
            _ => {}
        }
        if self.config.condition == Condition::Fixed && self.typed == self.config.script_text {
            self.typing_end = Some(TypingEnd::TextMatched);
            self.enter(Phase::PostRest);
            self.settle();
        }
        Ok(t_ms)
    }

    /// Moves to Aborted from any non-terminal phase.
    pub fn abort(&mut self, reason: impl Into<String>) -> bool {
        if self.phase.is_terminal() {
            return false;
        }
        self.abort_reason = Some(reason.into());
        self.enter(Phase::Aborted);
        true
    }

    pub fn snapshot(&self, id: &str, recording_path: Option<String>) -> SessionSnapshot {
        SessionSnapshot {
            id: id.to_owned(),
            phase: self.phase,
            phase_entered_at_ms: self.timeline.last().map_or(0, |m| m.at_ms),
            clock_ms: self.clock_ms(),
            remaining_s: self.remaining_s(),
            samples_so_far: self.samples.len() as u64,
            dropped_frames: self.dropped_frames,
            typed_text: self.typed.clone(),
            keystrokes: self.keystrokes.clone(),
            timeline: self.timeline.clone(),
            typing_end: self.typing_end,
            abort_reason: self.abort_reason.clone(),
            recording_path,
            config: self.config.clone(),
        }
    }

    /// The finished capture as a recording plus its key-event sidecar.
    pub fn to_recording(&self, id: &str) -> Result<(SampleSeries, RecordingMeta, Vec<KeyEvent>), InvalidPhase> {
        if self.phase != Phase::Finished {
            return Err(InvalidPhase { action: "save", phase: self.phase });
        }
        let series = SampleSeries::new(self.config.sample_rate_hz, self.samples.clone(), 0)
            .expect("samples come from validated frames at a validated rate");
        let mut meta = RecordingMeta::new(
            &self.config.user_id,
            self.config.condition,
            self.config.target_label,
            self.started_at.clone().unwrap_or_default(),
        );
        let timeline =
            self.timeline.iter().skip(1).map(|m| format!("{}@{}", m.phase, m.at_ms)).collect::<Vec<_>>().join(";");
        let typing_end = match self.typing_end {
            Some(TypingEnd::TextMatched) => "text_matched",
            _ => "time_limit",
        };
        meta.extras = BTreeMap::from([
            ("session_id".to_owned(), id.to_owned()),
            ("phase_timeline".to_owned(), timeline),
            ("dropped_frames".to_owned(), self.dropped_frames.to_string()),
            ("typing_end".to_owned(), typing_end.to_owned()),
        ]);
        let keys = self.keystrokes.iter().map(|k| KeyEvent { timestamp_ms: k.t_ms, key: k.key.clone() }).collect();
        Ok((series, meta, keys))
    }
}

/// Parses the `phase_timeline` header written into saved recordings.
pub fn parse_timeline(text: &str) -> Option<Vec<PhaseMark>> {
    text.split(';')
        .map(|part| {
            let (name, at) = part.split_once('@')?;
            let phase = [Phase::PreRest, Phase::Typing, Phase::PostRest, Phase::Finished]
                .into_iter()
                .find(|p| p.as_str() == name)?;
            Some(PhaseMark { phase, at_ms: at.parse().ok()? })
        })
        .collect()
}
