use std::fs;
use std::path::Path;
use std::process::Command;

use emg_affect::dataio::{load_corpus, read_recording};
use emg_affect::Label;
use emg_affect_cli::run;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("emg-affect").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn ok(args: &[&str]) -> String {
    let o = cli(args);
    assert_eq!(o.code, 0, "{args:?} failed: {}", o.stderr);
    o.stdout
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the default corpus under `dir` and returns its manifest path.
fn corpus(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["generate", "--out-dir", path(dir)];
    args.extend_from_slice(extra);
    ok(&args);
    dir.join("manifest.csv").to_str().unwrap().to_owned()
}

/// Value of `field` in a csv `field,value` table.
fn csv_field<'a>(text: &'a str, field: &str) -> &'a str {
    let prefix = format!("{field},");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str())).unwrap_or_else(|| panic!("no {field} in\n{text}"))
}

#[test]
fn generate_writes_forty_recordings_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), &[]);
    let entries = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(entries, 41);
    let corpus = load_corpus(Path::new(&manifest)).unwrap();
    assert_eq!(corpus.len(), 40);
    let angry = corpus.iter().filter(|r| r.meta.label == Label::Angry).count();
    assert_eq!(angry, 20);
}

#[test]
fn generate_is_reproducible_from_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    corpus(a.path(), &["--users", "2", "--seed", "9"]);
    corpus(b.path(), &["--users", "2", "--seed", "9"]);
    corpus(c.path(), &["--users", "2", "--seed", "10"]);
    let file = "u02_open_angry.csv";
    let ra = fs::read(a.path().join(file)).unwrap();
    assert_eq!(ra, fs::read(b.path().join(file)).unwrap());
    assert_ne!(ra, fs::read(c.path().join(file)).unwrap());
}

#[test]
fn generate_refuses_to_overwrite_without_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), &["--users", "1"]);
    let again = cli(&["generate", "--users", "1", "--out-dir", path(dir.path())]);
    assert_eq!(again.code, 1);
    assert!(again.stderr.starts_with("error:"), "{}", again.stderr);
    ok(&["generate", "--users", "1", "--overwrite", "--out-dir", path(dir.path())]);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), &["--users", "2"]);
    for args in [
        vec!["eval", "--manifest", manifest.as_str(), "--iterations", "0"],
        vec!["eval", "--manifest", manifest.as_str(), "--mode", "sideways"],
        vec!["eval"],
        vec!["eval", "--manifest", manifest.as_str(), "--matrix", "m.csv"],
        vec!["report", "--tp", "1"],
        vec!["generate", "--jobs", "0"],
        vec!["frobnicate"],
    ] {
        let o = cli(&args);
        assert_eq!(o.code, 2, "{args:?}: {}", o.stderr);
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.contains('\u{1b}'), "escape codes in {:?}", o.stderr);
    }
    let bad_gamma = cli(&["eval", "--manifest", manifest.as_str(), "--gamma", "wide"]);
    assert_eq!(bad_gamma.code, 2, "{}", bad_gamma.stderr);
    assert!(bad_gamma.stderr.starts_with("usage error:"));
}

#[test]
fn help_and_version_exit_cleanly() {
    let help = cli(&["--help"]);
    assert_eq!(help.code, 0);
    for sub in ["generate", "ingest", "extract", "select", "train", "predict", "eval", "report", "serve"] {
        assert!(help.stdout.contains(sub), "{sub} missing from help");
    }
    assert_eq!(cli(&["--version"]).code, 0);
}

#[test]
fn louo_on_one_user_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), &["--users", "1"]);
    let o = cli(&["eval", "--manifest", &manifest, "--mode", "louo"]);
    assert_eq!(o.code, 1, "{}", o.stderr);
    assert!(o.stderr.contains("at least 2 users"), "{}", o.stderr);
    let missing = cli(&["eval", "--manifest", path(&dir.path().join("nope.csv"))]);
    assert_eq!(missing.code, 1);
}

#[test]
fn every_report_starts_with_the_resolved_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["generate", "--users", "1", "--out-dir", path(dir.path())]);
    let header: Vec<&str> = out.lines().take_while(|l| l.starts_with('#')).collect();
    assert_eq!(header[0], "# emg-affect generate");
    for line in
        ["# seed = 42 (default)", "# users = 1 (flag)", "# duration-s = 60 (default)", "# jobs = auto (default)"]
    {
        assert!(header.contains(&line), "{line} missing from {header:?}");
    }

    let report = ok(&["report", "--tp", "1", "--fp", "2", "--fn", "3", "--tn", "4"]);
    assert!(report.contains("# fn = 3 (flag)"), "{report}");
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let report = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_emg-affect"));
        cmd.args(["report", "--tp", "1", "--fp", "1", "--fn", "1", "--tn", "1"]).current_dir(dir.path());
        cmd.env_remove("EMG_AFFECT_SEED");
        if let Some(v) = env {
            cmd.env("EMG_AFFECT_SEED", v);
        }
        cmd.output().unwrap().status.code()
    };
    let dir2 = tempfile::tempdir().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_emg-affect"));
    let o = cmd
        .args(["generate", "--users", "1", "--out-dir", path(dir2.path())])
        .env("EMG_AFFECT_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# seed = 7 (env)"), "{text}");

    let direct = tempfile::tempdir().unwrap();
    corpus(direct.path(), &["--users", "1", "--seed", "7"]);
    let file = "u01_fixed_angry.csv";
    assert_eq!(fs::read(dir2.path().join(file)).unwrap(), fs::read(direct.path().join(file)).unwrap());

    assert_eq!(report(Some("not-a-number")), Some(2));
    assert_eq!(report(None), Some(0));
}

#[test]
fn report_reproduces_the_confusion_metrics() {
    let out = ok(&["report", "--tp", "777", "--fp", "88", "--fn", "23", "--tn", "712", "--format", "csv"]);
    let metric = |name: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        line.split(',').nth(2).unwrap().parse().unwrap()
    };
    for (name, expected) in [
        ("Accuracy", 0.9306),
        ("Precision", 0.8983),
        ("Sensitivity", 0.9713),
        ("Specificity", 0.8900),
        ("False Positive Rate", 0.1100),
        ("False Negative Rate", 0.0288),
        ("F1 Score", 0.9333),
    ] {
        assert!((metric(name) - expected).abs() <= 5e-5 + 1e-12, "{name}");
    }
    assert!(out.contains("angry,777,88\nrelaxed,23,712"));
}

#[test]
fn report_flags_undefined_metrics() {
    let out = ok(&["report", "--tp", "5", "--fp", "0", "--fn", "0", "--tn", "0", "--format", "csv"]);
    assert!(out.contains("Specificity,SPC = TN / (FP + TN),0,no"), "{out}");
}

#[test]
fn extract_train_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), &["--users", "4"]);
    let d = path(dir.path());
    let extract = ok(&["extract", "--manifest", &manifest, "--out-dir", d, "--format", "csv"]);
    assert_eq!(csv_field(&extract, "rows"), "16");
    assert_eq!(csv_field(&extract, "columns"), "80");
    let matrix = dir.path().join("matrix.csv");

    let train = ok(&["train", "--matrix", path(&matrix), "--out-dir", d, "--format", "csv"]);
    let model = dir.path().join("model.txt");
    assert!(model.exists());
    let cv: f64 = csv_field(&train, "cv_accuracy").parse().unwrap();
    assert!(cv >= 0.75, "{train}");

    let recordings: Vec<String> = ["u01_fixed_angry.csv", "u03_open_relaxed.csv"]
        .iter()
        .map(|f| dir.path().join(f).to_str().unwrap().to_owned())
        .collect();
    let mut args = vec!["predict", "--model", path(&model), "--format", "csv"];
    args.extend(recordings.iter().map(String::as_str));
    let out = ok(&args);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip_while(|l| !l.starts_with("recording,"))
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row[3], row[4], "misclassified {row:?}");
        let decision: f64 = row[5].parse().unwrap();
        assert_eq!(decision > 0.0, row[4] == "angry");
    }
}

#[test]
fn select_on_a_matrix_reports_the_search() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), &["--users", "3"]);
    let out = ok(&["select", "--manifest", &manifest, "--log", "--format", "csv"]);
    assert_eq!(csv_field(&out, "subsets_evaluated"), "56");
    assert_eq!(csv_field(&out, "strategy_used"), "exhaustive");
    let logged = out.lines().skip_while(|l| *l != "features,cv_accuracy").skip(1).count();
    assert_eq!(logged, 56);

    let columns = ok(&["select", "--manifest", &manifest, "--granularity", "column", "--k", "2", "--format", "csv"]);
    assert_eq!(csv_field(&columns, "subsets_evaluated"), "3160");
    let greedy = ok(&[
        "select",
        "--manifest",
        &manifest,
        "--granularity",
        "column",
        "--k",
        "2",
        "--strategy",
        "greedy",
        "--format",
        "csv",
    ]);
    assert_eq!(csv_field(&greedy, "subsets_evaluated"), "159");
}

#[test]
fn ingest_turns_a_serial_capture_into_a_recording() {
    let dir = tempfile::tempdir().unwrap();
    let capture = dir.path().join("capture.txt");
    fs::write(&capture, "512\r\n513\n\nabc\n1000\n499\n").unwrap();
    let output = dir.path().join("rec.csv");
    let out = ok(&[
        "ingest",
        path(&capture),
        "--user",
        "u77",
        "--condition",
        "open",
        "--label",
        "relaxed",
        "--started-at",
        "2024-05-01T10:00:00Z",
        "--output",
        path(&output),
        "--format",
        "csv",
    ]);
    assert_eq!(csv_field(&out, "samples"), "3");
    assert_eq!(csv_field(&out, "dropped_frames"), "2");
    let rec = read_recording(&output).unwrap();
    assert_eq!(rec.series.samples(), &[512, 513, 499]);
    assert_eq!(rec.meta.user_id, "u77");
    assert_eq!(rec.meta.extras["dropped_frames"], "2");
}

#[test]
fn eval_is_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), &["--users", "4"]);
    let base = ["eval", "--manifest", manifest.as_str(), "--iterations", "6", "--mode", "split8020", "--format", "csv"];
    let with_jobs = |jobs: &str| {
        let mut args = base.to_vec();
        args.extend(["--jobs", jobs]);
        ok(&args)
    };
    let four = with_jobs("4");
    assert_eq!(four, with_jobs("4"));
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("# jobs")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&four), strip(&with_jobs("1")));
    assert_eq!(strip(&four), strip(&ok(&base)));
}

#[test]
fn split_eval_matches_the_reference_run() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), &[]);
    let out = ok(&[
        "eval",
        "--manifest",
        &manifest,
        "--mode",
        "split2080",
        "--iterations",
        "400",
        "--no-trace",
        "--format",
        "csv",
    ]);
    assert!(out.contains("angry,1435,7\nrelaxed,165,1593"), "{out}");
    assert_eq!(csv_field(&out, "test_rows"), "3200");
    let acc: f64 = csv_field(&out, "pooled_accuracy").parse().unwrap();
    let f1: f64 = csv_field(&out, "f1").parse().unwrap();
    let ratio: f64 = csv_field(&out, "fn_fp_ratio").parse().unwrap();
    assert!((acc - 3028.0 / 3200.0).abs() < 1e-12);
    assert!((f1 - 2870.0 / 3042.0).abs() < 1e-12);
    assert!((ratio - 165.0 / 7.0).abs() < 1e-12);
}

#[test]
fn json_lines_carry_the_configuration_and_one_object_per_row() {
    let out = ok(&["report", "--tp", "3", "--fp", "1", "--fn", "1", "--tn", "3", "--format", "json-lines"]);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["command"], "report");
    assert_eq!(lines[0]["config"]["tp"]["value"], "3");
    assert_eq!(lines[0]["config"]["format"]["source"], "flag");
    let accuracy = lines.iter().find(|l| l["metric"] == "Accuracy").unwrap();
    assert_eq!(accuracy["table"], "metrics");
    assert_eq!(accuracy["value"], 0.75);
}
