//! Sample sources: a clock-paced simulator and a line-oriented serial reader.

use std::io::{self, BufRead, BufReader, Read};
use std::time::Duration;

use emg_affect::corpus::derive_seed;
use emg_affect::signal::{SignalError, SynthGenerator, SynthProfile};
use emg_affect::Label;
use tokio::sync::mpsc;
use tokio::time::Instant;

use crate::frame::parse_serial_frame;
use crate::session::{Phase, Session};

/// Opens the byte stream behind a serial source.
pub trait SerialOpener: Send + Sync {
    fn open(&self, port: &str, baud: u32) -> io::Result<Box<dyn Read + Send>>;
}

/// Opens real ports through the operating system.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemSerial;

impl SerialOpener for SystemSerial {
    fn open(&self, port: &str, baud: u32) -> io::Result<Box<dyn Read + Send>> {
        let port = serialport::new(port, baud).timeout(Duration::from_millis(200)).open().map_err(io::Error::from)?;
        Ok(Box::new(port))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SerialEvent {
    Sample(u16),
    BadFrame(String),
    Lost(String),
}

/// Reads lines on a dedicated thread until the stream ends, fails, or the
/// receiver goes away. Read timeouts are retried.
pub fn spawn_line_reader(reader: Box<dyn Read + Send>, tx: mpsc::Sender<SerialEvent>) {
    std::thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        let mut line = Vec::new();
        loop {
            let event = match reader.read_until(b'\n', &mut line) {
                Ok(0) if line.is_empty() => SerialEvent::Lost("end of stream".into()),
                Ok(_) => {
                    let text = String::from_utf8_lossy(&line).into_owned();
                    line.clear();
                    match parse_serial_frame(&text) {
                        Ok(v) => SerialEvent::Sample(v),
                        Err(e) => SerialEvent::BadFrame(e.to_string()),
                    }
                }
                Err(e)
                    if matches!(
                        e.kind(),
                        io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock | io::ErrorKind::Interrupted
                    ) =>
                {
                    continue
                }
                Err(e) => SerialEvent::Lost(e.to_string()),
            };
            let lost = matches!(event, SerialEvent::Lost(_));
            if tx.blocking_send(event).is_err() || lost {
                return;
            }
        }
    });
}

/// Synthetic samples due by the (scaled) clock. Typing draws from the
/// activity profile, the rest phases from the idle profile.
#[derive(Debug)]
pub struct Simulator {
    typing: SynthGenerator,
    rest: SynthGenerator,
    rate: f64,
    speed: f64,
    origin: Option<Instant>,
    produced: u64,
}

impl Simulator {
    pub fn new(
        profile: Option<SynthProfile>,
        label: Label,
        seed: u64,
        speed: f64,
        rate: u32,
    ) -> Result<Self, SignalError> {
        let typing = profile.unwrap_or_else(|| SynthProfile::for_label(label, seed));
        let rest = SynthProfile { baseline: typing.baseline, ..SynthProfile::rest(derive_seed(seed, &[1])) };
        Ok(Self {
            typing: SynthGenerator::new(typing, rate)?,
            rest: SynthGenerator::new(rest, rate)?,
            rate: f64::from(rate),
            speed,
            origin: None,
            produced: 0,
        })
    }

    pub fn start(&mut self, now: Instant) {
        self.origin = Some(now);
    }

    /// Feeds every sample due at `now` into `session`, returning the ones
    /// it recorded.
    pub fn pump(&mut self, now: Instant, session: &mut Session) -> Vec<u16> {
        let Some(origin) = self.origin else {
            return Vec::new();
        };
        let due = (now.duration_since(origin).as_secs_f64() * self.speed * self.rate).floor() as u64;
        let mut out = Vec::new();
        while self.produced < due && session.phase().is_recording() {
            let generator = if session.phase() == Phase::Typing { &mut self.typing } else { &mut self.rest };
            let v = generator.next().expect("generator is endless");
            self.produced += 1;
            if session.push_sample(v) {
                out.push(v);
            }
        }
        out
    }
}
