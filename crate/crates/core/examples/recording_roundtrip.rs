//! Files end to end: write a corpus with its manifest, load it back, train a
//! model, persist it, reload it and classify a recording.
//!
//! Run:
//!   cargo run -p emg-affect --example recording_roundtrip -- [dir]

use emg_affect::corpus::{generate_corpus, write_corpus, CorpusSpec};
use emg_affect::dataio::{load_corpus, load_model, save_model};
use emg_affect::pipeline::{extract_matrix, recording_features, PipelineOptions};
use emg_affect::svm::{train, SvmHyperparams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = match std::env::args().nth(1) {
        Some(d) => std::path::PathBuf::from(d),
        None => std::env::temp_dir().join(format!("emg-affect-roundtrip-{}", std::process::id())),
    };
    let corpus = generate_corpus(&CorpusSpec { users: 4, seed: 3, ..Default::default() })?;
    let manifest = write_corpus(&corpus, &dir, true)?;
    let loaded = load_corpus(&manifest)?;
    assert_eq!(loaded, corpus);
    println!("wrote and reloaded {} recordings under {}", loaded.len(), dir.display());

    let opts = PipelineOptions::default();
    let matrix = extract_matrix(&loaded, &opts)?;
    let columns: Vec<usize> = (0..matrix.n_cols()).collect();
    let model = train(&matrix, &columns, &SvmHyperparams::default())?;
    let model_path = dir.join("model.txt");
    save_model(&model, &model_path, true)?;
    let reloaded = load_model(&model_path)?;
    println!("model: {} support vectors, saved to {}", reloaded.support_vectors().len(), model_path.display());

    for rec in loaded.iter().take(4) {
        let row = recording_features(rec, &opts)?;
        let d = reloaded.decision_value(&row.values)?;
        assert_eq!(d.to_bits(), model.decision_value(&row.values)?.to_bits());
        println!(
            "{} {} {:<7} -> {:<7} (decision {d:+.4})",
            rec.meta.user_id,
            rec.meta.condition,
            rec.meta.label,
            reloaded.predict(&row)?
        );
    }
    Ok(())
}
