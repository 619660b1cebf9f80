//! Session registry and the per-session actor.
//!
//! Each session runs on its own task that owns the [`Session`] and handles
//! API commands, source samples and the 10 Hz frame ticker one at a time.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use emg_affect::dataio::{key_events_path, sample_timestamp_ms, write_key_events, write_recording};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::{Instant, MissedTickBehavior};

use crate::config::{SessionConfig, SourceConfig};
use crate::session::{InvalidPhase, Phase, Session, SessionSnapshot};
use crate::source::{spawn_line_reader, SerialEvent, SerialOpener, Simulator, SystemSerial};

pub const FRAME_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error(transparent)]
    InvalidPhase(#[from] InvalidPhase),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("session `{0}` stopped responding")]
    SessionGone(String),
}

impl ServiceError {
    /// Stable machine-readable code used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::InvalidConfig(_) => "invalid_config",
            ServiceError::SourceUnavailable(_) => "source_unavailable",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::InvalidPhase(_) => "invalid_phase",
            ServiceError::Io(_) => "io_error",
            ServiceError::SessionGone(_) => "session_gone",
        }
    }
}

/// One batch of samples for live display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamFrame {
    /// Session time of `values[0]`, or of the next sample when empty.
    pub t_ms: u64,
    pub values: Vec<u16>,
    pub phase: Phase,
    pub remaining_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedRecording {
    pub recording_path: PathBuf,
    pub key_events_path: PathBuf,
}

enum Command {
    Start(oneshot::Sender<Result<SessionSnapshot, ServiceError>>),
    Key(String, oneshot::Sender<Result<u64, ServiceError>>),
    Snapshot(oneshot::Sender<SessionSnapshot>),
    Finish(oneshot::Sender<Result<SavedRecording, ServiceError>>),
    Abort(String, oneshot::Sender<SessionSnapshot>),
    Subscribe(oneshot::Sender<broadcast::Receiver<StreamFrame>>),
}

/// Shared handle to every live session. Cheap to clone.
#[derive(Clone)]
pub struct SessionManager {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: Mutex<HashMap<String, mpsc::Sender<Command>>>,
    next_id: AtomicU64,
    out_dir: PathBuf,
    serial: Arc<dyn SerialOpener>,
    default_source: Option<SourceConfig>,
}

impl SessionManager {
    /// Recordings are written under `out_dir`.
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self::with_serial(out_dir, Arc::new(SystemSerial))
    }

    pub fn with_serial(out_dir: impl Into<PathBuf>, serial: Arc<dyn SerialOpener>) -> Self {
        Self {
            inner: Arc::new(Inner {
                sessions: Mutex::new(HashMap::new()),
                next_id: AtomicU64::new(1),
                out_dir: out_dir.into(),
                serial,
                default_source: None,
            }),
        }
    }

    /// Source used for HTTP requests whose config leaves `source` out.
    pub fn with_default_source(self, source: SourceConfig) -> Self {
        let inner = Arc::try_unwrap(self.inner).unwrap_or_else(|_| panic!("configure the manager before sharing it"));
        Self { inner: Arc::new(Inner { default_source: Some(source), ..inner }) }
    }

    pub fn default_source(&self) -> Option<&SourceConfig> {
        self.inner.default_source.as_ref()
    }

    pub fn out_dir(&self) -> &Path {
        &self.inner.out_dir
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.sessions.lock().expect("registry lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    pub async fn create(&self, config: SessionConfig) -> Result<String, ServiceError> {
        let session = Session::new(config.clone()).map_err(ServiceError::InvalidConfig)?;
        let (simulator, serial) = match &config.source {
            SourceConfig::Simulator { profile, seed, speed } => {
                let sim = Simulator::new(*profile, config.target_label, *seed, *speed, config.sample_rate_hz)
                    .map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
                (Some(sim), None)
            }
            SourceConfig::Serial { port, baud } => {
                let reader = self
                    .inner
                    .serial
                    .open(port, *baud)
                    .map_err(|e| ServiceError::SourceUnavailable(format!("{port}: {e}")))?;
                let (tx, rx) = mpsc::channel(1024);
                spawn_line_reader(reader, tx);
                (None, Some(rx))
            }
        };
        let id = format!("s{:04}", self.inner.next_id.fetch_add(1, Ordering::Relaxed));
        let (tx, rx) = mpsc::channel(64);
        let (frames, _) = broadcast::channel(256);
        let actor = Actor {
            id: id.clone(),
            session,
            simulator,
            serial,
            frames: Some(frames),
            pending: Vec::new(),
            pending_t_ms: 0,
            saved: None,
            out_dir: self.inner.out_dir.clone(),
        };
        tokio::spawn(actor.run(rx));
        self.inner.sessions.lock().expect("registry lock").insert(id.clone(), tx);
        Ok(id)
    }

    async fn ask<T>(&self, id: &str, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, ServiceError> {
        let tx = self
            .inner
            .sessions
            .lock()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_owned()))?;
        let (reply, rx) = oneshot::channel();
        let gone = || ServiceError::SessionGone(id.to_owned());
        tx.send(make(reply)).await.map_err(|_| gone())?;
        rx.await.map_err(|_| gone())
    }

    pub async fn start(&self, id: &str) -> Result<SessionSnapshot, ServiceError> {
        self.ask(id, Command::Start).await?
    }

    /// Records a keystroke and returns its server-assigned timestamp.
    pub async fn key(&self, id: &str, key: impl Into<String>) -> Result<u64, ServiceError> {
        let key = key.into();
        self.ask(id, |r| Command::Key(key, r)).await?
    }

    pub async fn snapshot(&self, id: &str) -> Result<SessionSnapshot, ServiceError> {
        self.ask(id, Command::Snapshot).await
    }

    /// Saves a finished session. Calling it again returns the same paths.
    pub async fn finish(&self, id: &str) -> Result<SavedRecording, ServiceError> {
        self.ask(id, Command::Finish).await?
    }

    pub async fn abort(&self, id: &str, reason: impl Into<String>) -> Result<SessionSnapshot, ServiceError> {
        let reason = reason.into();
        self.ask(id, |r| Command::Abort(reason, r)).await
    }

    /// Live frames for one session. The stream closes after the frame that
    /// reports Finished or Aborted.
    pub async fn subscribe(&self, id: &str) -> Result<broadcast::Receiver<StreamFrame>, ServiceError> {
        self.ask(id, Command::Subscribe).await
    }
}

struct Actor {
    id: String,
    session: Session,
    simulator: Option<Simulator>,
    serial: Option<mpsc::Receiver<SerialEvent>>,
    frames: Option<broadcast::Sender<StreamFrame>>,
    pending: Vec<u16>,
    pending_t_ms: u64,
    saved: Option<SavedRecording>,
    out_dir: PathBuf,
}

impl Actor {
    async fn run(mut self, mut commands: mpsc::Receiver<Command>) {
        let mut ticker = tokio::time::interval(FRAME_INTERVAL);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            let recording = self.session.phase().is_recording();
            tokio::select! {
                cmd = commands.recv() => match cmd {
                    Some(cmd) => {
                        self.pump();
                        self.handle(cmd);
                    }
                    None => return,
                },
                _ = ticker.tick(), if recording => {
                    self.pump();
                    self.emit();
                }
                event = recv_serial(&mut self.serial) => self.on_serial(event),
            }
            if self.session.phase().is_terminal() && self.frames.is_some() {
                self.emit();
                self.frames = None;
            }
        }
    }

    fn pump(&mut self) {
        if let Some(sim) = &mut self.simulator {
            let fresh = sim.pump(Instant::now(), &mut self.session);
            self.buffer(&fresh);
        }
    }

    /// Queues freshly recorded samples for the next frame.
    fn buffer(&mut self, values: &[u16]) {
        if values.is_empty() {
            return;
        }
        if self.pending.is_empty() {
            let first = self.session.samples().len() - values.len();
            self.pending_t_ms = sample_timestamp_ms(0, first, self.session.config().sample_rate_hz);
        }
        self.pending.extend_from_slice(values);
    }

    fn emit(&mut self) {
        let values = std::mem::take(&mut self.pending);
        let t_ms = if values.is_empty() { self.session.clock_ms() } else { self.pending_t_ms };
        if let Some(frames) = &self.frames {
            let _ = frames.send(StreamFrame {
                t_ms,
                values,
                phase: self.session.phase(),
                remaining_s: self.session.remaining_s(),
            });
        }
    }

    fn on_serial(&mut self, event: Option<SerialEvent>) {
        match event {
            Some(SerialEvent::Sample(v)) => {
                if self.session.push_sample(v) {
                    self.buffer(&[v]);
                }
            }
            Some(SerialEvent::BadFrame(_)) => self.session.note_dropped_frame(),
            Some(SerialEvent::Lost(reason)) => {
                self.session.abort(format!("source lost: {reason}"));
                self.serial = None;
            }
            None => {
                self.session.abort("source lost: reader stopped");
                self.serial = None;
            }
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Start(reply) => {
                let result = self.session.start(started_at()).map_err(ServiceError::from);
                if result.is_ok() {
                    if let Some(sim) = &mut self.simulator {
                        sim.start(Instant::now());
                    }
                }
                let _ = reply.send(result.map(|()| self.snapshot()));
            }
            Command::Key(key, reply) => {
                let _ = reply.send(self.session.key(&key).map_err(ServiceError::from));
            }
            Command::Snapshot(reply) => {
                let _ = reply.send(self.snapshot());
            }
            Command::Finish(reply) => {
                let _ = reply.send(self.save());
            }
            Command::Abort(reason, reply) => {
                self.session.abort(reason);
                let _ = reply.send(self.snapshot());
            }
            Command::Subscribe(reply) => {
                let rx = match &self.frames {
                    Some(frames) => frames.subscribe(),
                    None => {
                        let (tx, rx) = broadcast::channel(1);
                        let _ = tx.send(StreamFrame {
                            t_ms: self.session.clock_ms(),
                            values: Vec::new(),
                            phase: self.session.phase(),
                            remaining_s: 0.0,
                        });
                        rx
                    }
                };
                let _ = reply.send(rx);
            }
        }
    }

    fn snapshot(&self) -> SessionSnapshot {
        let path = self.saved.as_ref().map(|s| s.recording_path.display().to_string());
        self.session.snapshot(&self.id, path)
    }

    fn save(&mut self) -> Result<SavedRecording, ServiceError> {
        if let Some(saved) = &self.saved {
            return Ok(saved.clone());
        }
        let (series, meta, keys) = self.session.to_recording(&self.id)?;
        let io = |e: emg_affect::dataio::DataIoError| ServiceError::Io(e.to_string());
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", self.out_dir.display())))?;
        let name = format!("{}_{}_{}_{}.csv", meta.user_id, meta.condition, meta.label, self.id);
        let recording_path = self.out_dir.join(name);
        write_recording(&series, &meta, &recording_path, false).map_err(io)?;
        let keys_path = key_events_path(&recording_path);
        write_key_events(&keys, &keys_path, false).map_err(io)?;
        let saved = SavedRecording { recording_path, key_events_path: keys_path };
        self.saved = Some(saved.clone());
        Ok(saved)
    }
}

async fn recv_serial(rx: &mut Option<mpsc::Receiver<SerialEvent>>) -> Option<SerialEvent> {
    match rx {
        Some(rx) => rx.recv().await,
        None => std::future::pending().await,
    }
}

fn started_at() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}
