//! The JSON API as a browser client sees it: create an Open session on a
//! 20x simulator, start it, read a few snapshots and save the recording.
//! Requests go straight to the router, no socket needed.
//!
//! Run:
//!   cargo run -p emg-affect-service --example http_api

use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use emg_affect_service::{router, SessionManager};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Result<Value, Box<dyn std::error::Error>> {
    let req = Request::builder().method(method).uri(uri);
    let req = match &body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string()))?,
        None => req.body(Body::empty())?,
    };
    let res = app.clone().oneshot(req).await?;
    let status = res.status();
    let bytes = res.into_body().collect().await?.to_bytes();
    let value: Value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes)? };
    println!("{method} {uri} -> {status}");
    Ok(value)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let app = router(SessionManager::new(dir.path()));

    let config = json!({
        "user_id": "u42",
        "condition": "open",
        "target_label": "angry",
        "typing_limit_s": 20,
        "source": {"kind": "simulator", "seed": 7, "speed": 20.0}
    });
    let id = call(&app, "POST", "/sessions", Some(config)).await?["id"].as_str().ok_or("no id")?.to_owned();
    call(&app, "POST", &format!("/sessions/{id}/start"), None).await?;

    loop {
        tokio::time::sleep(Duration::from_millis(250)).await;
        let snap = call(&app, "GET", &format!("/sessions/{id}"), None).await?;
        println!(
            "  phase {:<9} clock {:>6} ms  samples {:>5}  remaining {:.1} s",
            snap["phase"].as_str().unwrap_or("?"),
            snap["clock_ms"],
            snap["samples_so_far"],
            snap["remaining_s"].as_f64().unwrap_or(0.0)
        );
        if snap["phase"] == "finished" {
            break;
        }
    }
    let saved = call(&app, "POST", &format!("/sessions/{id}/finish"), None).await?;
    println!("{}", serde_json::to_string_pretty(&saved)?);
    let missing = call(&app, "GET", "/sessions/s9999", None).await?;
    println!("{missing}");
    Ok(())
}
