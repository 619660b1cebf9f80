//! Serial line frames: one ASCII decimal sample per line.

use emg_affect::signal::MAX_SAMPLE_VALUE;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("frame `{0}` is not a decimal integer")]
    NotInteger(String),
    #[error("frame value {0} outside 0..=999")]
    OutOfRange(u64),
}

/// Parses one line from the sensor. A trailing `\r` (and `\n`) is accepted.
pub fn parse_serial_frame(line: &str) -> Result<u16, FrameError> {
    let body = line.strip_suffix('\n').unwrap_or(line);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FrameError::NotInteger(body.escape_debug().to_string()));
    }
    let value: u64 = body.parse().map_err(|_| FrameError::OutOfRange(u64::MAX))?;
    if value > u64::from(MAX_SAMPLE_VALUE) {
        return Err(FrameError::OutOfRange(value));
    }
    Ok(value as u16)
}
