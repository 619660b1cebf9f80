//! Wrapper feature selection on the synthetic corpus: exhaustive search over
//! feature types for several subset sizes, then greedy search over columns.
//!
//! Run:
//!   cargo run --release -p emg-affect --example feature_selection -- [seed]

use emg_affect::corpus::{generate_corpus, CorpusSpec};
use emg_affect::features::column_label;
use emg_affect::pipeline::{extract_matrix, PipelineOptions};
use emg_affect::selection::{select_features, sweep_k, Granularity, SelectionSpec};
use emg_affect::svm::SvmHyperparams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let corpus = generate_corpus(&CorpusSpec { seed, ..Default::default() })?;
    let matrix = extract_matrix(&corpus, &PipelineOptions::default())?;
    let hp = SvmHyperparams::default();
    let spec = SelectionSpec { seed, ..Default::default() };

    println!("feature types, exhaustive:");
    for (k, res) in sweep_k(&matrix, &[3, 5, 7, 8], &spec, &hp)? {
        let names: Vec<&str> = res.kinds().iter().map(|k| k.symbol()).collect();
        println!("  k={k}: {:.4} over {:>2} subsets  [{}]", res.score, res.evaluated_count, names.join(" "));
    }

    let columns = SelectionSpec { granularity: Granularity::Column, k: 5, ..spec };
    let res = select_features(&matrix, &columns, &hp)?;
    let names: Vec<String> = res
        .chosen
        .iter()
        .map(|&c| {
            let (slot, kind) = column_label(c);
            format!("s{slot}_{kind}")
        })
        .collect();
    println!(
        "\ncolumns, {}: {:.4} over {} subsets  [{}]",
        res.strategy_used,
        res.score,
        res.evaluated_count,
        names.join(" ")
    );
    Ok(())
}
