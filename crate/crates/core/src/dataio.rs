//! Plain-text file formats: recordings, corpus manifests, feature matrices,
//! trained models and key-event sidecars.
//!
//! All formats are UTF-8 with `\n` line endings and `.` as decimal point.
//! Reals are written in shortest round-trip form, so every writer/reader pair
//! reproduces values bit for bit.
//!
//! Recording:
//!
//! ```text
//! user_id=u01
//! condition=fixed
//! label=relaxed
//! sample_rate_hz=200
//! started_at=2024-01-01T00:00:00Z
//! ---
//! 0,152
//! 5,149
//! ```
//!
//! Body timestamps are milliseconds since session start. Extra `key=value`
//! header lines are preserved in [`RecordingMeta::extras`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::features::{build_matrix, column_label, FeatureMatrix, FeatureVector, Provenance};
use crate::signal::{SampleSeries, MAX_SAMPLE_VALUE};
use crate::svm::{Normalizer, SvmModel};
use crate::{Condition, Label};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const MATRIX_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

const MODEL_MAGIC: &str = "emg-affect-model";
const MATRIX_MAGIC: &str = "# emg-affect feature-matrix";
const MANIFEST_MAGIC: &str = "# emg-affect manifest";

#[derive(Debug, thiserror::Error)]
pub enum DataIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: value {value} outside 0..=999")]
    ValueOutOfRange { line: usize, value: i64 },
    #[error("line {line}: timestamp does not increase")]
    NonMonotonicTimestamp { line: usize },
    #[error("{path}: header {field} is `{found}`, manifest says `{expected}`")]
    ManifestMismatch { path: PathBuf, field: &'static str, expected: String, found: String },
    #[error("unsupported format version {found}, this build reads version {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("sample rate {0} Hz exceeds the 1000 Hz millisecond timestamp resolution")]
    RateTooHigh(u32),
    #[error("invalid metadata: {0}")]
    InvalidMetadata(String),
    #[error("{path}: {source}")]
    Nested {
        path: PathBuf,
        #[source]
        source: Box<DataIoError>,
    },
}

impl DataIoError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        DataIoError::Parse { line, message: message.into() }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        DataIoError::Io { path: path.to_path_buf(), source }
    }

    fn within(self, path: &Path) -> Self {
        match self {
            e @ (DataIoError::Io { .. } | DataIoError::Nested { .. }) => e,
            e => DataIoError::Nested { path: path.to_path_buf(), source: Box::new(e) },
        }
    }

    /// Line number for parse-level errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            DataIoError::Parse { line, .. }
            | DataIoError::ValueOutOfRange { line, .. }
            | DataIoError::NonMonotonicTimestamp { line } => Some(*line),
            DataIoError::Nested { source, .. } => source.line(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordingMeta {
    pub user_id: String,
    pub condition: Condition,
    pub label: Label,
    /// UTC ISO-8601 timestamp, kept verbatim.
    pub started_at: String,
    pub extras: BTreeMap<String, String>,
}

impl RecordingMeta {
    pub fn new(user_id: impl Into<String>, condition: Condition, label: Label, started_at: impl Into<String>) -> Self {
        Self { user_id: user_id.into(), condition, label, started_at: started_at.into(), extras: BTreeMap::new() }
    }

    fn validate(&self) -> Result<(), DataIoError> {
        validate_token("user_id", &self.user_id)?;
        validate_timestamp(&self.started_at).map_err(DataIoError::InvalidMetadata)?;
        for (k, v) in &self.extras {
            if k.is_empty() || k.contains(['=', '\n', '\r']) || k == "---" || REQUIRED_KEYS.contains(&k.as_str()) {
                return Err(DataIoError::InvalidMetadata(format!("bad extra key `{k}`")));
            }
            if v.contains(['\n', '\r']) {
                return Err(DataIoError::InvalidMetadata(format!("extra `{k}` contains a newline")));
            }
        }
        Ok(())
    }
}

fn validate_token(what: &str, s: &str) -> Result<(), DataIoError> {
    if s.is_empty() || s.contains([',', '\n', '\r', '=']) || s.trim() != s {
        return Err(DataIoError::InvalidMetadata(format!(
            "{what} `{s}` must be non-empty without commas, `=` or surrounding whitespace"
        )));
    }
    Ok(())
}

fn validate_timestamp(s: &str) -> Result<(), String> {
    chrono::DateTime::parse_from_rfc3339(s).map(|_| ()).map_err(|e| format!("started_at `{s}` is not ISO-8601: {e}"))
}

const REQUIRED_KEYS: [&str; 5] = ["user_id", "condition", "label", "sample_rate_hz", "started_at"];

/// A series plus its header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recording {
    pub meta: RecordingMeta,
    pub series: SampleSeries,
}

/// Timestamp of sample `i`: `start + floor(i * 1000 / rate)`.
pub fn sample_timestamp_ms(start_offset_ms: u64, index: usize, sample_rate_hz: u32) -> u64 {
    start_offset_ms + index as u64 * 1000 / u64::from(sample_rate_hz)
}

pub fn format_recording(series: &SampleSeries, meta: &RecordingMeta) -> Result<String, DataIoError> {
    meta.validate()?;
    let rate = series.sample_rate_hz();
    if rate > 1000 {
        return Err(DataIoError::RateTooHigh(rate));
    }
    let mut out = String::with_capacity(64 + series.len() * 10);
    let _ = writeln!(out, "user_id={}", meta.user_id);
    let _ = writeln!(out, "condition={}", meta.condition);
    let _ = writeln!(out, "label={}", meta.label);
    let _ = writeln!(out, "sample_rate_hz={rate}");
    let _ = writeln!(out, "started_at={}", meta.started_at);
    for (k, v) in &meta.extras {
        let _ = writeln!(out, "{k}={v}");
    }
    out.push_str("---\n");
    for (i, v) in series.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{v}", sample_timestamp_ms(series.start_offset_ms(), i, rate));
    }
    Ok(out)
}

/// Writes a recording. Fails if `path` exists and `overwrite` is false.
pub fn write_recording(
    series: &SampleSeries,
    meta: &RecordingMeta,
    path: &Path,
    overwrite: bool,
) -> Result<(), DataIoError> {
    let text = format_recording(series, meta)?;
    write_text(path, &text, overwrite)
}

pub fn write_text(path: &Path, text: &str, overwrite: bool) -> Result<(), DataIoError> {
    let mut opts = OpenOptions::new();
    opts.write(true);
    if overwrite {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    let mut file = opts.open(path).map_err(|e| DataIoError::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| DataIoError::io(path, e))
}

fn read_text(path: &Path) -> Result<String, DataIoError> {
    fs::read_to_string(path).map_err(|e| DataIoError::io(path, e))
}

pub fn parse_recording(text: &str) -> Result<Recording, DataIoError> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut separator_line = None;
    for (no, line) in lines.by_ref() {
        if line == "---" {
            separator_line = Some(no);
            break;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| DataIoError::parse(no, "expected `key=value` header line or `---`"))?;
        if k.is_empty() {
            return Err(DataIoError::parse(no, "empty header key"));
        }
        if header.insert(k.to_string(), (no, v.to_string())).is_some() {
            return Err(DataIoError::parse(no, format!("duplicate header key `{k}`")));
        }
    }
    let sep = separator_line.ok_or_else(|| DataIoError::parse(text.split('\n').count(), "missing `---` separator"))?;

    let mut take =
        |key: &str| header.remove(key).ok_or_else(|| DataIoError::parse(sep, format!("missing header `{key}`")));
    let (no, user_id) = take("user_id")?;
    validate_token("user_id", &user_id).map_err(|e| DataIoError::parse(no, e.to_string()))?;
    let (no, condition) = take("condition")?;
    let condition = Condition::from_str(&condition).map_err(|e| DataIoError::parse(no, e.to_string()))?;
    let (no, label) = take("label")?;
    let label = Label::from_str(&label).map_err(|e| DataIoError::parse(no, e.to_string()))?;
    let (no, rate) = take("sample_rate_hz")?;
    let rate: u32 = rate
        .parse()
        .ok()
        .filter(|r| (1..=1000).contains(r))
        .ok_or_else(|| DataIoError::parse(no, format!("sample_rate_hz `{rate}` must be an integer in 1..=1000")))?;
    let (no, started_at) = take("started_at")?;
    validate_timestamp(&started_at).map_err(|e| DataIoError::parse(no, e))?;
    let extras = header.into_iter().map(|(k, (_, v))| (k, v)).collect();

    let mut samples = Vec::new();
    let mut first_ts = None;
    let mut last_ts: Option<u64> = None;
    for (no, line) in lines {
        if line.is_empty() {
            // only a trailing newline may produce an empty line
            if text.ends_with('\n') && no == text.split('\n').count() {
                continue;
            }
            return Err(DataIoError::parse(no, "empty body line"));
        }
        let (ts, value) =
            line.split_once(',').ok_or_else(|| DataIoError::parse(no, "expected `timestamp_ms,value`"))?;
        let ts: u64 = ts.parse().map_err(|_| DataIoError::parse(no, format!("bad timestamp `{ts}`")))?;
        let value: i64 = value.parse().map_err(|_| DataIoError::parse(no, format!("bad sample value `{value}`")))?;
        if !(0..=i64::from(MAX_SAMPLE_VALUE)).contains(&value) {
            return Err(DataIoError::ValueOutOfRange { line: no, value });
        }
        if last_ts.is_some_and(|prev| ts <= prev) {
            return Err(DataIoError::NonMonotonicTimestamp { line: no });
        }
        first_ts.get_or_insert(ts);
        last_ts = Some(ts);
        samples.push(value as u16);
    }
    let series =
        SampleSeries::new(rate, samples, first_ts.unwrap_or(0)).map_err(|e| DataIoError::parse(sep, e.to_string()))?;
    Ok(Recording { meta: RecordingMeta { user_id, condition, label, started_at, extras }, series })
}

pub fn read_recording(path: &Path) -> Result<Recording, DataIoError> {
    parse_recording(&read_text(path)?).map_err(|e| e.within(path))
}

/// One manifest line: a recording path relative to the manifest and the
/// metadata its header must carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub user_id: String,
    pub condition: Condition,
    pub label: Label,
}

pub fn format_manifest(entries: &[ManifestEntry]) -> Result<String, DataIoError> {
    let mut out = format!("{MANIFEST_MAGIC} v{MANIFEST_FORMAT_VERSION}\npath,user_id,condition,label\n");
    for e in entries {
        let p = e
            .path
            .to_str()
            .ok_or_else(|| DataIoError::InvalidMetadata(format!("non UTF-8 path {}", e.path.display())))?;
        validate_token("path", p)?;
        validate_token("user_id", &e.user_id)?;
        let _ = writeln!(out, "{p},{},{},{}", e.user_id, e.condition, e.label);
    }
    Ok(out)
}

pub fn write_manifest(entries: &[ManifestEntry], path: &Path, overwrite: bool) -> Result<(), DataIoError> {
    write_text(path, &format_manifest(entries)?, overwrite)
}

fn parse_version(line: &str, magic: &str, supported: u32, no: usize) -> Result<(), DataIoError> {
    let rest = line
        .strip_prefix(magic)
        .and_then(|r| r.strip_prefix(" v"))
        .ok_or_else(|| DataIoError::parse(no, format!("expected `{magic} v{supported}`")))?;
    let found: u32 = rest.parse().map_err(|_| DataIoError::parse(no, format!("bad version `{rest}`")))?;
    if found != supported {
        return Err(DataIoError::VersionMismatch { found, supported });
    }
    Ok(())
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n').enumerate().map(|(i, l)| (i + 1, l))
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, DataIoError> {
    let mut lines = content_lines(text);
    let (no, first) = lines.next().ok_or_else(|| DataIoError::parse(1, "empty manifest"))?;
    parse_version(first, MANIFEST_MAGIC, MANIFEST_FORMAT_VERSION, no)?;
    match lines.next() {
        Some((_, "path,user_id,condition,label")) => {}
        other => {
            let no = other.map_or(2, |(no, _)| no);
            return Err(DataIoError::parse(no, "expected column header `path,user_id,condition,label`"));
        }
    }
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (no, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let [path, user_id, condition, label] = fields[..] else {
            return Err(DataIoError::parse(no, "expected 4 comma-separated fields"));
        };
        if path.is_empty() || user_id.is_empty() {
            return Err(DataIoError::parse(no, "empty path or user_id"));
        }
        let entry = ManifestEntry {
            path: PathBuf::from(path),
            user_id: user_id.to_string(),
            condition: condition.parse().map_err(|e: crate::ParseLabelError| DataIoError::parse(no, e.to_string()))?,
            label: label.parse().map_err(|e: crate::ParseLabelError| DataIoError::parse(no, e.to_string()))?,
        };
        if entries.iter().any(|e| e.path == entry.path) {
            return Err(DataIoError::parse(no, format!("duplicate path `{path}`")));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, DataIoError> {
    parse_manifest(&read_text(path)?).map_err(|e| e.within(path))
}

/// Reads every recording a manifest lists, in manifest order, and checks each
/// header against its manifest line.
pub fn load_corpus(manifest_path: &Path) -> Result<Vec<Recording>, DataIoError> {
    let entries = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    entries
        .iter()
        .map(|entry| {
            let path = base.join(&entry.path);
            let rec = read_recording(&path)?;
            let mismatch = |field, expected: String, found: String| DataIoError::ManifestMismatch {
                path: path.clone(),
                field,
                expected,
                found,
            };
            if rec.meta.user_id != entry.user_id {
                return Err(mismatch("user_id", entry.user_id.clone(), rec.meta.user_id.clone()));
            }
            if rec.meta.condition != entry.condition {
                return Err(mismatch("condition", entry.condition.to_string(), rec.meta.condition.to_string()));
            }
            if rec.meta.label != entry.label {
                return Err(mismatch("label", entry.label.to_string(), rec.meta.label.to_string()));
            }
            Ok(rec)
        })
        .collect()
}

fn join_reals(values: &[f64], sep: &str) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(sep)
}

fn parse_real(s: &str, no: usize) -> Result<f64, DataIoError> {
    let v: f64 = s.parse().map_err(|_| DataIoError::parse(no, format!("bad number `{s}`")))?;
    if !v.is_finite() {
        return Err(DataIoError::parse(no, format!("non-finite number `{s}`")));
    }
    Ok(v)
}

fn parse_reals(s: &str, no: usize) -> Result<Vec<f64>, DataIoError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| parse_real(t, no)).collect()
}

/// Feature matrix as delimited text: a version line, a column header of
/// `user_id,condition,label,s<slot>_<FEATURE>...`, then one row per recording.
pub fn format_matrix(matrix: &FeatureMatrix) -> String {
    let mut out = format!("{MATRIX_MAGIC} v{MATRIX_FORMAT_VERSION}\nuser_id,condition,label");
    for &(slot, kind) in matrix.column_labels() {
        let _ = write!(out, ",s{slot}_{kind}");
    }
    out.push('\n');
    for row in matrix.rows() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.provenance.user_id,
            row.provenance.condition,
            row.label,
            join_reals(&row.values, ",")
        );
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<FeatureMatrix, DataIoError> {
    let mut lines = content_lines(text);
    let (no, first) = lines.next().ok_or_else(|| DataIoError::parse(1, "empty matrix file"))?;
    parse_version(first, MATRIX_MAGIC, MATRIX_FORMAT_VERSION, no)?;
    let (no, header) = lines.next().ok_or_else(|| DataIoError::parse(2, "missing column header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..3] != ["user_id", "condition", "label"] {
        return Err(DataIoError::parse(no, "column header must start with `user_id,condition,label`"));
    }
    let width = cols.len() - 3;
    for (c, name) in cols[3..].iter().enumerate() {
        let (slot, kind) = column_label(c);
        if *name != format!("s{slot}_{kind}") {
            return Err(DataIoError::parse(no, format!("column {} is `{name}`, expected `s{slot}_{kind}`", c + 3)));
        }
    }
    let mut rows = Vec::new();
    for (no, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width + 3 {
            return Err(DataIoError::parse(no, format!("expected {} fields, found {}", width + 3, fields.len())));
        }
        validate_token("user_id", fields[0]).map_err(|e| DataIoError::parse(no, e.to_string()))?;
        let condition = fields[1].parse().map_err(|e: crate::ParseLabelError| DataIoError::parse(no, e.to_string()))?;
        let label = fields[2].parse().map_err(|e: crate::ParseLabelError| DataIoError::parse(no, e.to_string()))?;
        let values = fields[3..].iter().map(|t| parse_real(t, no)).collect::<Result<Vec<_>, _>>()?;
        rows.push(FeatureVector {
            values,
            label,
            provenance: Provenance { user_id: fields[0].to_string(), condition },
        });
    }
    build_matrix(rows).map_err(|e| DataIoError::parse(2, e.to_string()))
}

pub fn write_matrix(matrix: &FeatureMatrix, path: &Path, overwrite: bool) -> Result<(), DataIoError> {
    write_text(path, &format_matrix(matrix), overwrite)
}

pub fn read_matrix(path: &Path) -> Result<FeatureMatrix, DataIoError> {
    parse_matrix(&read_text(path)?).map_err(|e| e.within(path))
}

/// Model envelope:
///
/// ```text
/// emg-affect-model v1
/// gamma=0.05
/// bias=-0.0123
/// input_width=80
/// active_columns=0,8,16
/// norm_mean=...
/// norm_sd=...
/// support_vectors=2
/// sv=<dual coef>;<v0>,<v1>,...
/// sv=...
/// ```
pub fn format_model(model: &SvmModel) -> String {
    let n = model.normalizer();
    let cols: Vec<String> = n.columns().iter().map(usize::to_string).collect();
    let mut out = format!("{MODEL_MAGIC} v{MODEL_FORMAT_VERSION}\n");
    let _ = writeln!(out, "gamma={:?}", model.gamma());
    let _ = writeln!(out, "bias={:?}", model.bias());
    let _ = writeln!(out, "input_width={}", model.input_width());
    let _ = writeln!(out, "active_columns={}", cols.join(","));
    let _ = writeln!(out, "norm_mean={}", join_reals(n.mean(), ","));
    let _ = writeln!(out, "norm_sd={}", join_reals(n.sd(), ","));
    let _ = writeln!(out, "support_vectors={}", model.support_vectors().len());
    for (sv, coef) in model.support_vectors().iter().zip(model.dual_coefs()) {
        let _ = writeln!(out, "sv={coef:?};{}", join_reals(sv, ","));
    }
    out
}

pub fn parse_model(text: &str) -> Result<SvmModel, DataIoError> {
    let mut lines = content_lines(text);
    let (no, first) = lines.next().ok_or_else(|| DataIoError::parse(1, "empty model file"))?;
    parse_version(first, MODEL_MAGIC, MODEL_FORMAT_VERSION, no)?;
    let mut field = |key: &str| -> Result<(usize, &str), DataIoError> {
        let (no, line) =
            lines.next().ok_or_else(|| DataIoError::parse(text.lines().count() + 1, format!("missing `{key}`")))?;
        let value = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| DataIoError::parse(no, format!("expected `{key}=`")))?;
        Ok((no, value))
    };
    let (no, v) = field("gamma")?;
    let gamma = parse_real(v, no)?;
    let (no, v) = field("bias")?;
    let bias = parse_real(v, no)?;
    let (no, v) = field("input_width")?;
    let input_width: usize = v.parse().map_err(|_| DataIoError::parse(no, format!("bad input_width `{v}`")))?;
    let (cols_no, v) = field("active_columns")?;
    let columns: Vec<usize> = if v.is_empty() {
        Vec::new()
    } else {
        v.split(',')
            .map(|t| t.parse().map_err(|_| DataIoError::parse(cols_no, format!("bad column `{t}`"))))
            .collect::<Result<_, _>>()?
    };
    let (no, v) = field("norm_mean")?;
    let mean = parse_reals(v, no)?;
    let (no, v) = field("norm_sd")?;
    let sd = parse_reals(v, no)?;
    let (no, v) = field("support_vectors")?;
    let count: usize = v.parse().map_err(|_| DataIoError::parse(no, format!("bad support vector count `{v}`")))?;
    let mut svs = Vec::with_capacity(count.min(1 << 16));
    let mut coefs = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let (no, v) = field("sv")?;
        let (coef, values) = v.split_once(';').ok_or_else(|| DataIoError::parse(no, "expected `coef;values`"))?;
        coefs.push(parse_real(coef, no)?);
        svs.push(parse_reals(values, no)?);
    }
    if let Some((no, _)) = lines.next() {
        return Err(DataIoError::parse(no, "unexpected trailing content"));
    }
    let normalizer =
        Normalizer::from_parts(columns, mean, sd).map_err(|e| DataIoError::parse(cols_no, e.to_string()))?;
    SvmModel::from_parts(svs, coefs, bias, gamma, normalizer, input_width)
        .map_err(|e| DataIoError::parse(cols_no, e.to_string()))
}

pub fn save_model(model: &SvmModel, path: &Path, overwrite: bool) -> Result<(), DataIoError> {
    write_text(path, &format_model(model), overwrite)
}

pub fn load_model(path: &Path) -> Result<SvmModel, DataIoError> {
    parse_model(&read_text(path)?).map_err(|e| e.within(path))
}

/// A keystroke with its session timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyEvent {
    pub timestamp_ms: u64,
    pub key: String,
}

/// Key-event sidecar: `timestamp_ms,<JSON string>` per line, so any key
/// (including `,` and newlines) survives.
pub fn format_key_events(events: &[KeyEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = writeln!(out, "{},{}", e.timestamp_ms, json_string(&e.key));
    }
    out
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn unjson_string(s: &str, no: usize) -> Result<String, DataIoError> {
    let bad = || DataIoError::parse(no, format!("bad key literal `{s}`"));
    let inner = s.strip_prefix('"').and_then(|r| r.strip_suffix('"')).ok_or_else(bad)?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next().ok_or_else(bad)? {
                '"' => out.push('"'),
                '\\' => out.push('\\'),
                'n' => out.push('\n'),
                'r' => out.push('\r'),
                't' => out.push('\t'),
                'u' => {
                    let hex: String = chars.by_ref().take(4).collect();
                    let code = u32::from_str_radix(&hex, 16).map_err(|_| bad())?;
                    out.push(char::from_u32(code).ok_or_else(bad)?);
                }
                _ => return Err(bad()),
            },
            '"' => return Err(bad()),
            c => out.push(c),
        }
    }
    Ok(out)
}

pub fn parse_key_events(text: &str) -> Result<Vec<KeyEvent>, DataIoError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    content_lines(text)
        .map(|(no, line)| {
            let (ts, key) =
                line.split_once(',').ok_or_else(|| DataIoError::parse(no, "expected `timestamp_ms,key`"))?;
            Ok(KeyEvent {
                timestamp_ms: ts.parse().map_err(|_| DataIoError::parse(no, format!("bad timestamp `{ts}`")))?,
                key: unjson_string(key, no)?,
            })
        })
        .collect()
}

pub fn write_key_events(events: &[KeyEvent], path: &Path, overwrite: bool) -> Result<(), DataIoError> {
    write_text(path, &format_key_events(events), overwrite)
}

pub fn read_key_events(path: &Path) -> Result<Vec<KeyEvent>, DataIoError> {
    parse_key_events(&read_text(path)?).map_err(|e| e.within(path))
}

/// Sidecar path for a recording: `<stem>.keys.csv` next to it.
pub fn key_events_path(recording: &Path) -> PathBuf {
    let stem = recording.file_stem().and_then(|s| s.to_str()).unwrap_or("recording");
    recording.with_file_name(format!("{stem}.keys.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = "user_id=u01\ncondition=fixed\nlabel=angry\nsample_rate_hz=200\nstarted_at=2024-01-01T00:00:00Z\n---\n0,10\n5,999\n10,0\n";

    #[test]
    fn parses_valid_recording() {
        let rec = parse_recording(VALID).unwrap();
        assert_eq!(rec.series.samples(), &[10, 999, 0]);
        assert_eq!(rec.meta.label, Label::Angry);
        assert_eq!(rec.series.sample_rate_hz(), 200);
        assert_eq!(format_recording(&rec.series, &rec.meta).unwrap(), VALID);
    }

    #[test]
    fn rejects_value_1000_with_line_number() {
        let text = VALID.replace("5,999", "5,1000");
        assert!(matches!(parse_recording(&text), Err(DataIoError::ValueOutOfRange { line: 8, value: 1000 })));
    }

    #[test]
    fn missing_separator_is_a_parse_error() {
        let text = VALID.replace("---\n", "");
        assert!(matches!(parse_recording(&text), Err(DataIoError::Parse { .. })));
    }

    #[test]
    fn non_monotonic_timestamps() {
        let text = VALID.replace("10,0", "5,0");
        assert!(matches!(parse_recording(&text), Err(DataIoError::NonMonotonicTimestamp { line: 9 })));
    }

    #[test]
    fn extras_survive() {
        let mut rec = parse_recording(VALID).unwrap();
        rec.meta.extras.insert("dropped_frames".into(), "3".into());
        let text = format_recording(&rec.series, &rec.meta).unwrap();
        assert_eq!(parse_recording(&text).unwrap(), rec);
    }

    #[test]
    fn model_version_and_corruption() {
        let text = "emg-affect-model v2\n";
        assert!(matches!(parse_model(text), Err(DataIoError::VersionMismatch { found: 2, supported: 1 })));
        let bad = "emg-affect-model v1\ngamma=0.5\nbias=abc\n";
        assert!(matches!(parse_model(bad), Err(DataIoError::Parse { line: 3, .. })));
    }

    #[test]
    fn key_events_escape_delimiters() {
        let events = vec![
            KeyEvent { timestamp_ms: 10, key: ",".into() },
            KeyEvent { timestamp_ms: 12, key: "\"\n\\".into() },
            KeyEvent { timestamp_ms: 20, key: "Backspace".into() },
        ];
        assert_eq!(parse_key_events(&format_key_events(&events)).unwrap(), events);
    }

    #[test]
    fn manifest_rejects_duplicates() {
        let text =
            "# emg-affect manifest v1\npath,user_id,condition,label\na.csv,u1,fixed,angry\na.csv,u1,open,angry\n";
        assert!(matches!(parse_manifest(text), Err(DataIoError::Parse { line: 4, .. })));
    }
}
