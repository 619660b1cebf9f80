//! Runs one Fixed-mode capture against the simulator at 20x speed, typing
//! the paragraph as a subject would, then saves and re-reads the recording.
//!
//! ```text
//! cargo run -p emg-affect-service --example simulated_session [out_dir]
//! ```

use std::time::Duration;

use emg_affect::dataio::read_recording;
use emg_affect::{Condition, Label};
use emg_affect_service::{Phase, SessionConfig, SessionManager, SourceConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("emg-affect-session"), Into::into);
    let manager = SessionManager::new(&out_dir);
    let speed = 20.0;

    let mut config = SessionConfig::new(
        "demo",
        Condition::Fixed,
        Label::Angry,
        SourceConfig::Simulator { profile: None, seed: 7, speed },
    );
    config.script_text = "The quick brown fox.".into();
    let id = manager.create(config.clone()).await?;
    let mut frames = manager.subscribe(&id).await?;
    manager.start(&id).await?;
    println!("session {id} started, writing to {}", out_dir.display());

    let typist = {
        let manager = manager.clone();
        let id = id.clone();
        let script = config.script_text.clone();
        tokio::spawn(async move {
            while manager.snapshot(&id).await?.phase != Phase::Typing {
                tokio::time::sleep(Duration::from_millis(20)).await;
            }
            for ch in script.chars() {
                tokio::time::sleep(Duration::from_secs_f64(0.25 / speed)).await;
                manager.key(&id, ch.to_string()).await?;
            }
            Ok::<_, emg_affect_service::ServiceError>(())
        })
    };

    let mut shown = None;
    let mut samples = 0;
    while let Ok(frame) = frames.recv().await {
        samples += frame.values.len();
        if shown != Some(frame.phase) {
            println!("{:<9}  {:5.1} s left", frame.phase.as_str(), frame.remaining_s);
            shown = Some(frame.phase);
        }
    }
    typist.await??;

    let saved = manager.finish(&id).await?;
    let rec = read_recording(&saved.recording_path)?;
    println!("streamed {samples} samples, saved {} to {}", rec.series.len(), saved.recording_path.display());
    println!("phase timeline: {}", rec.meta.extras["phase_timeline"]);
    println!("keystrokes in {}", saved.key_events_path.display());
    Ok(())
}
