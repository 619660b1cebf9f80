//! The `emg-affect` command line.
//!
//! [`run`] parses arguments, runs one subcommand and returns the process exit
//! code: 0 on success, 1 for domain errors (bad data, failed training, I/O),
//! 2 for usage errors. Every report starts with the resolved configuration,
//! defaults included, so a run can be repeated from its own output.

use std::ffi::OsString;
use std::io::Write;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};

pub mod args;
pub mod commands;
pub mod report;

pub use args::Cli;
use report::{render, Setting};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

macro_rules! domain_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain(e.to_string())
            }
        }
    )*};
}

domain_errors!(
    emg_affect::dataio::DataIoError,
    emg_affect::eval::EvalError,
    emg_affect::selection::SelectionError,
    emg_affect::svm::SvmError,
    emg_affect::signal::SignalError,
    emg_affect::pipeline::PipelineError,
    emg_affect::features::FeatureError,
    std::io::Error
);

/// How a setting got its value.
pub(crate) fn source_of(matches: &ArgMatches, id: &str) -> &'static str {
    match matches.value_source(id) {
        Some(ValueSource::CommandLine) => "flag",
        Some(ValueSource::EnvVariable) => "env",
        _ => "default",
    }
}

/// Collects settings for the report header.
pub(crate) struct Settings<'a> {
    pub matches: &'a ArgMatches,
    pub list: Vec<Setting>,
}

impl Settings<'_> {
    pub fn add(&mut self, id: &str, value: impl ToString) {
        self.list.push(Setting {
            key: id.trim_end_matches('_').replace('_', "-"),
            value: value.to_string(),
            source: source_of(self.matches, id),
        });
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return 2;
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    match execute(&cli, name, sub, out) {
        Ok(()) => 0,
        Err(e) => {
            let kind = if matches!(e, CliError::Usage(_)) { "usage error" } else { "error" };
            let _ = writeln!(err, "{kind}: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, name: &str, sub: &ArgMatches, out: &mut dyn Write) -> Result<(), CliError> {
    let mut settings = Settings { matches: sub, list: Vec::new() };
    if let args::Command::Serve(a) = &cli.command {
        return commands::serve(cli, a, &mut settings, out);
    }
    let pool = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(usize::from(n)).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Domain(format!("cannot start worker pool: {e}")))?;
    let tables = pool.install(|| commands::dispatch(cli, &mut settings))?;
    settings.add("format", commands::name(&cli.format));
    settings.add("jobs", cli.jobs.map_or_else(|| "auto".to_owned(), |j| j.to_string()));
    let text = render(name, &settings.list, &tables, cli.format);
    out.write_all(text.as_bytes())?;
    Ok(())
}
