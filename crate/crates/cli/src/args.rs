use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emg_affect::eval::{EvalMode, DEFAULT_ITERATIONS};
use emg_affect::selection::{Granularity, Strategy, DEFAULT_BUDGET, DEFAULT_K};
use emg_affect::signal::{DEFAULT_SAMPLE_RATE_HZ, DEFAULT_SLOT_COUNT};
use emg_affect::svm::DEFAULT_C;
use emg_affect::{Condition, Label};

use crate::report::Format;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "emg-affect", version, about = "Forearm EMG emotion classification pipeline")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "EMG_AFFECT_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory for generated files.
    #[arg(long, global = true, default_value = "emg-affect-out")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Worker threads for selection and evaluation (default: one per core).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    pub overwrite: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus and its manifest.
    Generate(GenerateArgs),
    /// Convert a raw serial capture (one sample per line) into a recording.
    Ingest(IngestArgs),
    /// Extract the feature matrix of a corpus.
    Extract(ExtractArgs),
    /// Search for the best feature subset.
    Select(SelectArgs),
    /// Select features on all rows, train an SVM and save it.
    Train(TrainArgs),
    /// Classify recordings with a saved model.
    Predict(PredictArgs),
    /// Leave-one-user-out or 80-20 evaluation.
    Eval(EvalArgs),
    /// Metrics of a confusion matrix.
    Report(ReportArgs),
    /// Run the session-capture HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    Fixed,
    Open,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Fixed => Condition::Fixed,
            ConditionArg::Open => Condition::Open,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    Relaxed,
    Angry,
}

impl From<LabelArg> for Label {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::Relaxed => Label::Relaxed,
            LabelArg::Angry => Label::Angry,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u16).range(1..))]
    pub users: u16,
    /// Typing conditions to record per label.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ConditionArg::Fixed, ConditionArg::Open])]
    pub conditions: Vec<ConditionArg>,
    /// Recording length including the rest windows.
    #[arg(long, default_value_t = 60.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE_HZ)]
    pub sample_rate: u32,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Text capture with one ASCII integer per line.
    pub input: PathBuf,
    #[arg(long)]
    pub user: String,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    #[arg(long, value_enum)]
    pub label: LabelArg,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE_HZ)]
    pub sample_rate: u32,
    /// Capture start as ISO-8601 (default: now).
    #[arg(long)]
    pub started_at: Option<String>,
    /// Output recording (default: <out-dir>/<user>_<condition>_<label>.csv).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SLOT_COUNT)]
    pub slots: usize,
    /// Output matrix (default: <out-dir>/matrix.csv).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Where the feature matrix comes from.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct MatrixInput {
    /// A feature-matrix file written by `extract`.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// A corpus manifest, extracted on the fly.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    /// Whole feature types across all slots.
    Type,
    /// Individual slot/feature columns.
    Column,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Type => Granularity::FeatureType,
            GranularityArg::Column => Granularity::Column,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Auto,
    Exhaustive,
    Greedy,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
            StrategyArg::Greedy => Strategy::GreedyForward,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    /// Subset size.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = GranularityArg::Type)]
    pub granularity: GranularityArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    pub strategy: StrategyArg,
    /// Largest subset count searched exhaustively under `auto`.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = DEFAULT_SLOT_COUNT)]
    pub slots: usize,
}

#[derive(Debug, Args)]
pub struct SvmArgs {
    /// Box constraint.
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    /// RBF width; `auto` is 1 / (columns * mean variance).
    #[arg(long, default_value = "auto")]
    pub gamma: String,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
    /// Also list the score of every evaluated subset.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
    /// Output model (default: <out-dir>/model.txt).
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Recordings to classify.
    #[arg(required = true)]
    pub recordings: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Leave one user out.
    Louo,
    /// 80% train, 20% test.
    Split8020,
    /// Same split as `split8020` (20% test).
    Split2080,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Louo => EvalMode::LeaveOneUserOut,
            ModeArg::Split8020 | ModeArg::Split2080 => EvalMode::Split8020,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    #[arg(long, value_enum, default_value_t = ModeArg::Louo)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS as u32, value_parser = clap::value_parser!(u32).range(1..))]
    pub iterations: u32,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
    /// Select features once on all rows instead of per iteration.
    #[arg(long)]
    pub global: bool,
    /// Leave out the per-iteration table.
    #[arg(long)]
    pub no_trace: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub tp: u64,
    #[arg(long)]
    pub fp: u64,
    #[arg(long = "fn")]
    pub fn_: u64,
    #[arg(long)]
    pub tn: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Default to this serial port for sessions that name no source.
    #[arg(long)]
    pub serial: Option<String>,
    #[arg(long, default_value_t = emg_affect_service::config::DEFAULT_BAUD)]
    pub baud: u32,
    /// Clock multiplier for the default simulator source.
    #[arg(long, default_value_t = 1.0)]
    pub sim_speed: f64,
}
