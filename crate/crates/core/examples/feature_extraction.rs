//! Turns the default synthetic corpus into the 40 x 80 feature matrix and
//! prints per-class means of each feature type.
//!
//! Run:
//!   cargo run -p emg-affect --example feature_extraction -- [seed] [matrix.csv]

use emg_affect::corpus::{generate_corpus, CorpusSpec};
use emg_affect::dataio::write_matrix;
use emg_affect::features::{FeatureKind, FEATURE_COUNT};
use emg_affect::pipeline::{extract_matrix, PipelineOptions};
use emg_affect::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let out = args.next();

    let corpus = generate_corpus(&CorpusSpec { seed, ..Default::default() })?;
    let matrix = extract_matrix(&corpus, &PipelineOptions::default())?;
    println!("{} recordings -> {} x {} matrix", corpus.len(), matrix.n_rows(), matrix.n_cols());

    println!("\n{:<7} {:>12} {:>12}", "feature", "relaxed", "angry");
    for ordinal in 0..FEATURE_COUNT {
        let kind = FeatureKind::from_ordinal(ordinal).expect("ordinal < 8");
        let cols = matrix.columns_for_kinds(&[kind]);
        let mean_for = |label: Label| {
            let rows: Vec<_> = matrix.rows().iter().filter(|r| r.label == label).collect();
            let total: f64 = rows.iter().flat_map(|r| cols.iter().map(|&c| r.values[c])).sum();
            total / (rows.len() * cols.len()) as f64
        };
        println!("{:<7} {:>12.3} {:>12.3}", kind.symbol(), mean_for(Label::Relaxed), mean_for(Label::Angry));
    }

    if let Some(path) = out {
        write_matrix(&matrix, path.as_ref(), true)?;
        println!("\nwrote {path}");
    }
    Ok(())
}
