use emg_affect::signal::SynthProfile;
use emg_affect::{Condition, Label};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PRE_REST_S: f64 = 10.0;
pub const DEFAULT_POST_REST_S: f64 = 5.0;
pub const DEFAULT_TYPING_LIMIT_S: f64 = 60.0;
pub const DEFAULT_FIXED_CAP_S: f64 = 300.0;
pub const DEFAULT_BAUD: u32 = 9600;

/// Everything needed to run one capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub user_id: String,
    pub condition: Condition,
    pub target_label: Label,
    /// Paragraph to type in Fixed mode. Ignored in Open mode.
    #[serde(default)]
    pub script_text: String,
    /// Length of the Open-mode typing phase.
    #[serde(default = "default_typing_limit")]
    pub typing_limit_s: f64,
    /// Fixed-mode typing ends here even if the paragraph is incomplete.
    #[serde(default = "default_fixed_cap")]
    pub fixed_time_cap_s: f64,
    #[serde(default = "default_pre_rest")]
    pub pre_rest_s: f64,
    #[serde(default = "default_post_rest")]
    pub post_rest_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: u32,
    pub source: SourceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceConfig {
    /// A sensor printing one sample per line on a serial port.
    Serial {
        port: String,
        #[serde(default = "default_baud")]
        baud: u32,
    },
    /// Synthetic samples paced by the clock. Typing uses `profile` (or the
    /// default profile for the target label); rest phases use the idle
    /// profile. `speed` scales the clock, 1.0 being real time.
    Simulator {
        #[serde(default)]
        profile: Option<SynthProfile>,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_speed")]
        speed: f64,
    },
}

impl SourceConfig {
    pub fn simulator(seed: u64) -> Self {
        SourceConfig::Simulator { profile: None, seed, speed: 1.0 }
    }
}

fn default_typing_limit() -> f64 {
    DEFAULT_TYPING_LIMIT_S
}
fn default_fixed_cap() -> f64 {
    DEFAULT_FIXED_CAP_S
}
fn default_pre_rest() -> f64 {
    DEFAULT_PRE_REST_S
}
fn default_post_rest() -> f64 {
    DEFAULT_POST_REST_S
}
fn default_rate() -> u32 {
    emg_affect::signal::DEFAULT_SAMPLE_RATE_HZ
}
fn default_baud() -> u32 {
    DEFAULT_BAUD
}
fn default_speed() -> f64 {
    1.0
}

impl SessionConfig {
    /// A config with default timings.
    pub fn new(user_id: impl Into<String>, condition: Condition, target_label: Label, source: SourceConfig) -> Self {
        Self {
            user_id: user_id.into(),
            condition,
            target_label,
            script_text: String::new(),
            typing_limit_s: DEFAULT_TYPING_LIMIT_S,
            fixed_time_cap_s: DEFAULT_FIXED_CAP_S,
            pre_rest_s: DEFAULT_PRE_REST_S,
            post_rest_s: DEFAULT_POST_REST_S,
            sample_rate_hz: default_rate(),
            source,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let u = &self.user_id;
        if u.is_empty() || u.trim() != u || u.contains([',', '=', '/', '\\', '\n', '\r']) {
            return Err(format!("user_id `{u}` must be non-empty without `,`, `=`, slashes or surrounding whitespace"));
        }
        if self.condition == Condition::Fixed && self.script_text.is_empty() {
            return Err("fixed condition needs a non-empty script_text".into());
        }
        if !(1..=1000).contains(&self.sample_rate_hz) {
            return Err(format!("sample_rate_hz {} outside 1..=1000", self.sample_rate_hz));
        }
        let durations = [
            ("pre_rest_s", self.pre_rest_s, false),
            ("post_rest_s", self.post_rest_s, false),
            ("typing_limit_s", self.typing_limit_s, true),
            ("fixed_time_cap_s", self.fixed_time_cap_s, true),
        ];
        for (name, v, positive) in durations {
            if !v.is_finite() || v < 0.0 || (positive && v == 0.0) {
                return Err(format!(
                    "{name} must be finite and {}",
                    if positive { "positive" } else { "non-negative" }
                ));
            }
        }
        match &self.source {
            SourceConfig::Serial { port, baud } => {
                if port.is_empty() || *baud == 0 {
                    return Err("serial source needs a port and a positive baud rate".into());
                }
            }
            SourceConfig::Simulator { profile, speed, .. } => {
                if !(speed.is_finite() && *speed > 0.0) {
                    return Err("simulator speed must be positive".into());
                }
                if let Some(p) = profile {
                    p.validate().map_err(|e| e.to_string())?;
                }
            }
        }
        Ok(())
    }

    /// Samples in a phase lasting `seconds`.
    pub fn samples_for(&self, seconds: f64) -> u64 {
        (seconds * f64::from(self.sample_rate_hz)).round() as u64
    }
}
