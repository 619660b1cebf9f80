//! Session capture for the EMG affect pipeline.
//!
//! A session walks through `created -> pre_rest -> typing -> post_rest ->
//! finished` (or `aborted` from any phase) while a sample source feeds it.
//! Finished sessions are saved as ordinary recording files, rest windows
//! included, with a `.keys.csv` sidecar of keystrokes.
//!
//! [`http::router`] exposes the JSON API and a server-sent event stream of
//! 10 Hz display frames.

pub mod config;
pub mod frame;
pub mod http;
pub mod manager;
pub mod session;
pub mod source;

pub use config::{SessionConfig, SourceConfig};
pub use frame::{parse_serial_frame, FrameError};
pub use http::{router, serve};
pub use manager::{SavedRecording, ServiceError, SessionManager, StreamFrame};
pub use session::{Phase, Session, SessionSnapshot};
