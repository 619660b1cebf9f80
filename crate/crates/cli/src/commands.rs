use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use emg_affect::corpus::{generate_corpus, recording_file_name, write_corpus, CorpusSpec};
use emg_affect::dataio::{
    load_corpus, load_model, read_matrix, read_recording, save_model, write_matrix, write_recording, RecordingMeta,
};
use emg_affect::eval::{metrics, run_eval, ConfusionMatrix, EvalPlan, Metric, MetricsReport};
use emg_affect::features::{column_label, FeatureKind, FeatureMatrix, FEATURE_COUNT};
use emg_affect::pipeline::{extract_matrix, recording_features, PipelineOptions};
use emg_affect::selection::{active_columns, select_features, Granularity, SelectionResult, SelectionSpec};
use emg_affect::signal::SampleSeries;
use emg_affect::svm::{label_for, train, Gamma, SvmHyperparams};
use emg_affect_service::{parse_serial_frame, SessionManager, SourceConfig};

use crate::args::{
    Cli, Command, EvalArgs, ExtractArgs, GenerateArgs, IngestArgs, MatrixInput, PredictArgs, ReportArgs, SelectArgs,
    SelectionArgs, ServeArgs, SvmArgs, TrainArgs,
};
use crate::report::{render, Cell, Table};
use crate::{CliError, Settings};

pub(crate) fn dispatch(cli: &Cli, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a, s),
        Command::Ingest(a) => ingest(cli, a, s),
        Command::Extract(a) => extract(cli, a, s),
        Command::Select(a) => select(cli, a, s),
        Command::Train(a) => train_cmd(cli, a, s),
        Command::Predict(a) => predict(a, s),
        Command::Eval(a) => eval(cli, a, s),
        Command::Report(a) => report(a, s),
        Command::Serve(_) => unreachable!("serve runs outside the worker pool"),
    }
}

pub(crate) fn name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

fn generate(cli: &Cli, a: &GenerateArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    s.add("seed", cli.seed);
    s.add("users", a.users);
    s.add("conditions", a.conditions.iter().map(name).collect::<Vec<_>>().join(","));
    s.add("duration_s", a.duration_s);
    s.add("sample_rate", a.sample_rate);
    s.add("out_dir", cli.out_dir.display());
    let mut conditions: Vec<_> = a.conditions.iter().map(|&c| c.into()).collect();
    conditions.dedup();
    let spec = CorpusSpec {
        users: usize::from(a.users),
        conditions,
        duration_s: a.duration_s,
        sample_rate_hz: a.sample_rate,
        seed: cli.seed,
        ..Default::default()
    };
    let corpus = generate_corpus(&spec)?;
    let manifest = write_corpus(&corpus, &cli.out_dir, cli.overwrite)?;
    let mut files = Table::new("recordings", &["file", "user_id", "condition", "label", "samples"]);
    for rec in &corpus {
        files.push(vec![
            recording_file_name(&rec.meta).into(),
            rec.meta.user_id.clone().into(),
            rec.meta.condition.as_str().into(),
            rec.meta.label.as_str().into(),
            rec.series.len().into(),
        ]);
    }
    let summary = Table::pairs(
        "corpus",
        vec![("recordings", corpus.len().into()), ("manifest", manifest.display().to_string().into())],
    );
    Ok(vec![summary, files])
}

fn ingest(cli: &Cli, a: &IngestArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    let started_at =
        a.started_at.clone().unwrap_or_else(|| chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string());
    s.add("input", a.input.display());
    s.add("user", &a.user);
    s.add("condition", name(&a.condition));
    s.add("label", name(&a.label));
    s.add("sample_rate", a.sample_rate);
    s.add("started_at", &started_at);
    let text =
        std::fs::read_to_string(&a.input).map_err(|e| CliError::Domain(format!("{}: {e}", a.input.display())))?;
    let mut samples = Vec::new();
    let mut dropped = 0u64;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            continue;
        }
        match parse_serial_frame(line) {
            Ok(v) => samples.push(v),
            Err(_) => dropped += 1,
        }
    }
    let series = SampleSeries::new(a.sample_rate, samples, 0)?;
    let mut meta = RecordingMeta::new(&a.user, a.condition.into(), a.label.into(), started_at);
    meta.extras.insert("dropped_frames".into(), dropped.to_string());
    let output = a.output.clone().unwrap_or_else(|| cli.out_dir.join(recording_file_name(&meta)));
    s.add("output", output.display());
    ensure_parent(&output)?;
    write_recording(&series, &meta, &output, cli.overwrite)?;
    Ok(vec![Table::pairs(
        "ingest",
        vec![
            ("samples", series.len().into()),
            ("dropped_frames", dropped.into()),
            ("duration_s", Cell::Real(series.duration_s(), 3)),
            ("recording", output.display().to_string().into()),
        ],
    )])
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            std::fs::create_dir_all(p).map_err(|e| CliError::Domain(format!("{}: {e}", p.display())))
        }
        _ => Ok(()),
    }
}

fn pipeline(slots: usize) -> Result<PipelineOptions, CliError> {
    if slots == 0 {
        return Err(CliError::Usage("--slots must be positive".into()));
    }
    Ok(PipelineOptions { slot_count: slots, ..Default::default() })
}

fn extract(cli: &Cli, a: &ExtractArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    let output = a.output.clone().unwrap_or_else(|| cli.out_dir.join("matrix.csv"));
    s.add("manifest", a.manifest.display());
    s.add("slots", a.slots);
    s.add("output", output.display());
    let corpus = load_corpus(&a.manifest)?;
    let matrix = extract_matrix(&corpus, &pipeline(a.slots)?)?;
    ensure_parent(&output)?;
    write_matrix(&matrix, &output, cli.overwrite)?;
    Ok(vec![Table::pairs(
        "matrix",
        vec![
            ("rows", matrix.n_rows().into()),
            ("columns", matrix.n_cols().into()),
            ("users", matrix.users().len().into()),
            ("path", output.display().to_string().into()),
        ],
    )])
}

fn load_matrix(input: &MatrixInput, slots: usize, s: &mut Settings) -> Result<FeatureMatrix, CliError> {
    if let Some(path) = &input.matrix {
        s.add("matrix", path.display());
        return Ok(read_matrix(path)?);
    }
    let manifest = input.manifest.as_ref().expect("clap requires one input");
    s.add("manifest", manifest.display());
    s.add("slots", slots);
    let corpus = load_corpus(manifest)?;
    Ok(extract_matrix(&corpus, &pipeline(slots)?)?)
}

fn hyperparams(a: &SvmArgs, seed: u64, s: &mut Settings) -> Result<SvmHyperparams, CliError> {
    s.add("c", a.c);
    s.add("gamma", &a.gamma);
    let gamma = match a.gamma.as_str() {
        "auto" => Gamma::Auto,
        g => Gamma::Fixed(
            g.parse().map_err(|_| CliError::Usage(format!("--gamma `{g}` is neither `auto` nor a number")))?,
        ),
    };
    let hp = SvmHyperparams { c: a.c, gamma, seed, ..Default::default() };
    hp.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(hp)
}

fn selection_spec(a: &SelectionArgs, seed: u64, s: &mut Settings) -> SelectionSpec {
    s.add("k", a.k);
    s.add("granularity", name(&a.granularity));
    s.add("strategy", name(&a.strategy));
    s.add("budget", a.budget);
    SelectionSpec {
        granularity: a.granularity.into(),
        k: a.k,
        strategy: a.strategy.into(),
        budget: a.budget,
        seed,
        keep_log: false,
    }
}

/// `MAV+RMS` for feature types, `s0_MAV+s3_RMS` for columns.
fn describe(granularity: Granularity, chosen: &[usize]) -> String {
    let names: Vec<String> = chosen
        .iter()
        .map(|&c| match granularity {
            Granularity::FeatureType => {
                FeatureKind::from_ordinal(c).map_or_else(|| c.to_string(), |k| k.symbol().to_owned())
            }
            Granularity::Column => {
                let (slot, kind) = column_label(c);
                format!("s{slot}_{kind}")
            }
        })
        .collect();
    names.join("+")
}

fn selection_table(spec: &SelectionSpec, res: &SelectionResult) -> Table {
    Table::pairs(
        "selection",
        vec![
            ("features", describe(spec.granularity, &res.chosen).into()),
            ("cv_accuracy", Cell::Real(res.score, 4)),
            ("subsets_evaluated", res.evaluated_count.into()),
            ("strategy_used", res.strategy_used.to_string().into()),
        ],
    )
}

fn select(cli: &Cli, a: &SelectArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    s.add("seed", cli.seed);
    let matrix = load_matrix(&a.input, a.selection.slots, s)?;
    let spec = SelectionSpec { keep_log: a.log, ..selection_spec(&a.selection, cli.seed, s) };
    let hp = hyperparams(&a.svm, cli.seed, s)?;
    let res = select_features(&matrix, &spec, &hp)?;
    let mut tables = vec![selection_table(&spec, &res)];
    if let Some(log) = &res.per_subset_log {
        let mut t = Table::new("subsets", &["features", "cv_accuracy"]);
        for (subset, score) in log {
            t.push(vec![describe(spec.granularity, subset).into(), Cell::Real(*score, 4)]);
        }
        tables.push(t);
    }
    Ok(tables)
}

fn train_cmd(cli: &Cli, a: &TrainArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    s.add("seed", cli.seed);
    let matrix = load_matrix(&a.input, a.selection.slots, s)?;
    let spec = selection_spec(&a.selection, cli.seed, s);
    let hp = hyperparams(&a.svm, cli.seed, s)?;
    let path = a.model.clone().unwrap_or_else(|| cli.out_dir.join("model.txt"));
    s.add("model", path.display());
    let res = select_features(&matrix, &spec, &hp)?;
    let columns = active_columns(&matrix, spec.granularity, &res.chosen);
    let model = train(&matrix, &columns, &hp)?;
    let correct = matrix
        .rows()
        .iter()
        .map(|r| model.predict(r).map(|p| p == r.label))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|&ok| ok)
        .count();
    ensure_parent(&path)?;
    save_model(&model, &path, cli.overwrite)?;
    let fit = Table::pairs(
        "model",
        vec![
            ("rows", matrix.n_rows().into()),
            ("active_columns", columns.len().into()),
            ("support_vectors", model.support_vectors().len().into()),
            ("gamma", Cell::Real(model.gamma(), 6)),
            ("bias", Cell::Real(model.bias(), 6)),
            ("training_accuracy", Cell::Real(correct as f64 / matrix.n_rows() as f64, 4)),
            ("path", path.display().to_string().into()),
        ],
    );
    Ok(vec![selection_table(&spec, &res), fit])
}

fn predict(a: &PredictArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    s.add("model", a.model.display());
    let model = load_model(&a.model)?;
    let width = model.input_width();
    if width == 0 || width % FEATURE_COUNT != 0 {
        return Err(CliError::Domain(format!("model expects {width} inputs, not a whole number of slots")));
    }
    let opts = pipeline(width / FEATURE_COUNT)?;
    let mut t =
        Table::new("predictions", &["recording", "user_id", "condition", "recorded_label", "predicted", "decision"]);
    for path in &a.recordings {
        let rec = read_recording(path)?;
        let row = recording_features(&rec, &opts)?;
        let decision = model.decision_value(&row.values)?;
        t.push(vec![
            path.display().to_string().into(),
            rec.meta.user_id.clone().into(),
            rec.meta.condition.as_str().into(),
            rec.meta.label.as_str().into(),
            label_for(decision).as_str().into(),
            Cell::Real(decision, 6),
        ]);
    }
    Ok(vec![t])
}

fn confusion_table(cm: &ConfusionMatrix) -> Table {
    let mut t = Table::new("confusion matrix (rows predicted, columns actual)", &["predicted", "angry", "relaxed"]);
    t.push(vec!["angry".into(), cm.tp.into(), cm.fp.into()]);
    t.push(vec!["relaxed".into(), cm.fn_.into(), cm.tn.into()]);
    t
}

fn metrics_table(m: &MetricsReport) -> Table {
    let mut t = Table::new("metrics", &["metric", "formula", "value", "defined"]);
    for metric in Metric::ALL {
        let defined = if m.degenerate.contains(&metric) { "no" } else { "yes" };
        t.push(vec![metric.name().into(), metric.formula().into(), Cell::Real(m.get(metric), 4), defined.into()]);
    }
    t
}

fn ratio_cell(cm: &ConfusionMatrix) -> Cell {
    cm.fn_fp_ratio().map_or(Cell::Empty, |r| Cell::Real(r, 4))
}

fn eval(cli: &Cli, a: &EvalArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    s.add("seed", cli.seed);
    s.add("mode", name(&a.mode));
    s.add("iterations", a.iterations);
    s.add("global", a.global);
    let matrix = load_matrix(&a.input, a.selection.slots, s)?;
    let selection = selection_spec(&a.selection, cli.seed, s);
    let hp = hyperparams(&a.svm, cli.seed, s)?;
    let plan = EvalPlan {
        iterations: a.iterations as usize,
        seed: cli.seed,
        selection,
        hp,
        reselect_per_iteration: !a.global,
        ..EvalPlan::new(a.mode.into())
    };
    let report = run_eval(&matrix, &plan)?;
    let summary = Table::pairs(
        "summary",
        vec![
            ("mode", plan.mode.to_string().into()),
            ("iterations", report.iterations.len().into()),
            ("test_rows", report.confusion.total().into()),
            ("mean_accuracy", Cell::Real(report.mean_accuracy, 4)),
            ("pooled_accuracy", Cell::Real(report.metrics.accuracy, 4)),
            ("f1", Cell::Real(report.metrics.f1, 4)),
            ("fn_fp_ratio", ratio_cell(&report.confusion)),
        ],
    );
    let mut tables = vec![summary, confusion_table(&report.confusion), metrics_table(&report.metrics)];
    if !a.no_trace {
        let mut t =
            Table::new("iterations", &["iteration", "test_user", "features", "tp", "fp", "fn", "tn", "accuracy"]);
        for it in &report.iterations {
            let cm = it.confusion;
            t.push(vec![
                it.iteration.into(),
                it.test_user.clone().map_or(Cell::Empty, Cell::Text),
                describe(selection.granularity, &it.chosen).into(),
                cm.tp.into(),
                cm.fp.into(),
                cm.fn_.into(),
                cm.tn.into(),
                Cell::Real(it.accuracy, 4),
            ]);
        }
        tables.push(t);
    }
    Ok(tables)
}

fn report(a: &ReportArgs, s: &mut Settings) -> Result<Vec<Table>, CliError> {
    s.add("tp", a.tp);
    s.add("fp", a.fp);
    s.add("fn_", a.fn_);
    s.add("tn", a.tn);
    let cm = ConfusionMatrix::new(a.tp, a.fp, a.fn_, a.tn);
    let m = metrics(&cm)?;
    let summary = Table::pairs("summary", vec![("total", cm.total().into()), ("fn_fp_ratio", ratio_cell(&cm))]);
    Ok(vec![summary, confusion_table(&cm), metrics_table(&m)])
}

pub(crate) fn serve(cli: &Cli, a: &ServeArgs, s: &mut Settings, out: &mut dyn Write) -> Result<(), CliError> {
    s.add("bind", a.bind);
    s.add("out_dir", cli.out_dir.display());
    let source = match &a.serial {
        Some(port) => {
            s.add("serial", port);
            s.add("baud", a.baud);
            SourceConfig::Serial { port: port.clone(), baud: a.baud }
        }
        None => {
            s.add("seed", cli.seed);
            s.add("sim_speed", a.sim_speed);
            if !(a.sim_speed.is_finite() && a.sim_speed > 0.0) {
                return Err(CliError::Usage("--sim-speed must be positive".into()));
            }
            SourceConfig::Simulator { profile: None, seed: cli.seed, speed: a.sim_speed }
        }
    };
    let dir: PathBuf = cli.out_dir.clone();
    let manager = SessionManager::new(dir).with_default_source(source);
    out.write_all(render("serve", &s.list, &[], cli.format).as_bytes())?;
    writeln!(out, "listening on http://{}", a.bind)?;
    out.flush()?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime
        .block_on(emg_affect_service::serve(a.bind, manager))
        .map_err(|e| CliError::Domain(format!("{}: {e}", a.bind)))
}
