//! Seeded synthetic EMG: the Relaxed, Angry and rest profiles side by side.
//!
//! Run:
//!   cargo run -p emg-affect --example synthetic_signals -- [seed]

use emg_affect::signal::{generate_synthetic, partition_slots, trim_rest_windows, SynthProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let profiles = [
        ("rest", SynthProfile::rest(seed)),
        ("relaxed", SynthProfile::relaxed(seed)),
        ("angry", SynthProfile::angry(seed)),
    ];
    println!("{:<8} {:>8} {:>8} {:>6} {:>6}", "profile", "mean", "sd", "min", "max");
    for (name, profile) in &profiles {
        let s = generate_synthetic(profile, 30.0, 200)?;
        let x = s.to_f64();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
        let (min, max) = (s.samples().iter().min().unwrap(), s.samples().iter().max().unwrap());
        println!("{name:<8} {mean:>8.2} {sd:>8.2} {min:>6} {max:>6}");
    }

    // a 60 s capture: rest windows are trimmed before slotting
    let rest = generate_synthetic(&SynthProfile::rest(seed), 10.0, 200)?;
    let active = generate_synthetic(&SynthProfile::angry(seed), 45.0, 200)?;
    let tail = generate_synthetic(&SynthProfile::rest(seed + 1), 5.0, 200)?;
    let capture = rest.concat(&active)?.concat(&tail)?;
    let trimmed = trim_rest_windows(&capture, 10.0, 5.0)?;
    let slots = partition_slots(&trimmed, 10)?;
    println!(
        "\ncapture {} samples -> trimmed {} samples (offset {} ms) -> {} slots of {}",
        capture.len(),
        trimmed.len(),
        trimmed.start_offset_ms(),
        slots.slot_count(),
        slots.slot_bounds()[0].len()
    );
    Ok(())
}
