use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Emotional state of a recording. `Angry` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Relaxed,
    Angry,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Relaxed, Label::Angry];

    /// +1 for Angry, -1 for Relaxed.
    pub fn sign(self) -> f64 {
        match self {
            Label::Angry => 1.0,
            Label::Relaxed => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Relaxed => "relaxed",
            Label::Angry => "angry",
        }
    }
}

/// Typing protocol a recording was captured under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// A given paragraph typed verbatim.
    Fixed,
    /// Free typing for a fixed time.
    Open,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Fixed, Condition::Open];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Fixed => "fixed",
            Condition::Open => "open",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized {kind} `{value}`")]
pub struct ParseLabelError {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relaxed" => Ok(Label::Relaxed),
            "angry" => Ok(Label::Angry),
            _ => Err(ParseLabelError { kind: "label", value: s.to_string() }),
        }
    }
}

impl FromStr for Condition {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(Condition::Fixed),
            "open" => Ok(Condition::Open),
            _ => Err(ParseLabelError { kind: "condition", value: s.to_string() }),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
