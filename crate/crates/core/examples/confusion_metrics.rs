//! The seven summary metrics for a confusion matrix given on the command
//! line.
//!
//! Run:
//!   cargo run -p emg-affect --example confusion_metrics -- [tp fp fn tn]

use emg_affect::eval::{metrics, ConfusionMatrix, Metric};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let cm = match args.as_slice() {
        [tp, fp, fn_, tn] => ConfusionMatrix::new(*tp, *fp, *fn_, *tn),
        [] => ConfusionMatrix::new(777, 88, 23, 712),
        _ => return Err("expected four counts: tp fp fn tn".into()),
    };
    let report = metrics(&cm)?;

    println!("                 actual Angry  actual Relaxed");
    println!("predicted Angry   {:>12}  {:>14}", cm.tp, cm.fp);
    println!("predicted Relaxed {:>12}  {:>14}\n", cm.fn_, cm.tn);
    for metric in Metric::ALL {
        let flag = if report.degenerate.contains(&metric) { "  (0/0)" } else { "" };
        println!("{:<20} {:<28} {:.4}{flag}", metric.name(), metric.formula(), report.get(metric));
    }
    if let Some(ratio) = cm.fn_fp_ratio() {
        println!("\nFN/FP ratio {ratio:.3}");
    }
    Ok(())
}
