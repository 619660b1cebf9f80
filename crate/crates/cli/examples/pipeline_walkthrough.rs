//! Every batch subcommand in order on a small corpus: generate, extract,
//! select, train, predict, eval and report.
//!
//! Run:
//!   cargo run --release -p emg-affect-cli --example pipeline_walkthrough

use emg_affect_cli::run;

fn step(args: &[&str]) -> Result<(), Box<dyn std::error::Error>> {
    println!("$ emg-affect {}", args.join(" "));
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("emg-affect").chain(args.iter().copied()), &mut out, &mut err);
    print!("{}", String::from_utf8(out)?);
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8(err)?).into());
    }
    println!();
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let d = dir.path().to_str().ok_or("temp path is not UTF-8")?;
    let manifest = format!("{d}/manifest.csv");
    let matrix = format!("{d}/matrix.csv");
    let model = format!("{d}/model.txt");

    step(&["generate", "--users", "4", "--out-dir", d])?;
    step(&["extract", "--manifest", &manifest, "--out-dir", d])?;
    step(&["select", "--matrix", &matrix, "--k", "3"])?;
    step(&["train", "--matrix", &matrix, "--out-dir", d])?;
    step(&["predict", "--model", &model, &format!("{d}/u02_open_angry.csv"), &format!("{d}/u04_fixed_relaxed.csv")])?;
    step(&["eval", "--matrix", &matrix, "--mode", "louo", "--iterations", "8", "--no-trace"])?;
    step(&["report", "--tp", "777", "--fp", "88", "--fn", "23", "--tn", "712"])?;
    Ok(())
}
