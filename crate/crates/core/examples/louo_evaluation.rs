//! Leave-one-user-out evaluation on the default synthetic corpus.
//!
//! Generates 10 users x 4 recordings (60 s @ 200 Hz), extracts the 40 x 80
//! feature matrix and runs the full pipeline: per-iteration type-level best-5
//! selection, SVM training, prediction on the held-out user.
//!
//! Run:
//!   cargo run --release -p emg-affect --example louo_evaluation -- [iterations] [seed]

use std::time::Instant;

use emg_affect::corpus::{generate_corpus, CorpusSpec};
use emg_affect::eval::{run_eval, EvalMode, EvalPlan};
use emg_affect::pipeline::{extract_matrix, PipelineOptions};
use emg_affect::selection::SelectionSpec;
use emg_affect::svm::SvmHyperparams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let started = Instant::now();
    let corpus = generate_corpus(&CorpusSpec { seed, ..Default::default() })?;
    let matrix = extract_matrix(&corpus, &PipelineOptions::default())?;
    println!("matrix: {} rows x {} columns", matrix.n_rows(), matrix.n_cols());

    let plan = EvalPlan {
        iterations,
        seed,
        selection: SelectionSpec { seed, ..Default::default() },
        hp: SvmHyperparams::default(),
        ..EvalPlan::new(EvalMode::LeaveOneUserOut)
    };
    let report = run_eval(&matrix, &plan)?;

    let cm = report.confusion;
    println!("iterations: {iterations}, seed: {seed}");
    println!("mean accuracy: {:.4}", report.mean_accuracy);
    println!("                 actual Angry  actual Relaxed");
    println!("predicted Angry   {:>12}  {:>14}", cm.tp, cm.fp);
    println!("predicted Relaxed {:>12}  {:>14}", cm.fn_, cm.tn);
    let m = &report.metrics;
    println!(
        "precision {:.4}  sensitivity {:.4}  specificity {:.4}  f1 {:.4}",
        m.precision, m.sensitivity, m.specificity, m.f1
    );
    if let Some(ratio) = cm.fn_fp_ratio() {
        println!("FN/FP ratio: {ratio:.3}");
    }
    println!("elapsed: {:.2?}", started.elapsed());
    Ok(())
}
