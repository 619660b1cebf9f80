//! Repeated random 80-20 evaluation, with per-iteration reselection or one
//! global feature set.
//!
//! Run:
//!   cargo run --release -p emg-affect --example split_8020_evaluation -- [iterations] [seed]

use emg_affect::corpus::{generate_corpus, CorpusSpec};
use emg_affect::eval::{run_eval, EvalMode, EvalPlan};
use emg_affect::pipeline::{extract_matrix, PipelineOptions};
use emg_affect::selection::SelectionSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let corpus = generate_corpus(&CorpusSpec { seed, ..Default::default() })?;
    let matrix = extract_matrix(&corpus, &PipelineOptions::default())?;

    for reselect in [true, false] {
        let plan = EvalPlan {
            iterations,
            seed,
            selection: SelectionSpec { seed, ..Default::default() },
            reselect_per_iteration: reselect,
            ..EvalPlan::new(EvalMode::Split8020)
        };
        let report = run_eval(&matrix, &plan)?;
        let cm = report.confusion;
        println!(
            "{:<22} accuracy {:.4}  f1 {:.4}  tp {} fp {} fn {} tn {}",
            if reselect { "per-iteration select:" } else { "global select:" },
            report.metrics.accuracy,
            report.metrics.f1,
            cm.tp,
            cm.fp,
            cm.fn_,
            cm.tn
        );
    }
    Ok(())
}
