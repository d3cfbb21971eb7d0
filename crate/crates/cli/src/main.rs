//! `statelaw`: ingest statutes, search them, tag discourse spans, and
//! collect annotations.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

/// Shorthand for data errors from any displayable error.
pub fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "statelaw", version, about = "Statute corpus pipeline: ingest, search, tag, annotate")]
struct Cli {
    /// TOML config file (default: $STATUTE_HOME/statelaw.toml if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a statute manifest (JSON lines) into a corpus, fetching texts
    /// that are not given inline.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Census keyword rules (TOML).
        #[arg(long)]
        keywords: Option<PathBuf>,
        /// Fetch policy (TOML).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Fail on records without inline text instead of fetching.
        #[arg(long)]
        no_fetch: bool,
    },
    /// Keep documents with at least one census-related paragraph.
    FilterCensus {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        keywords: Option<PathBuf>,
    },
    /// Build the search index.
    Index {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the discourse tagger on annotated paragraphs.
    Train(TrainArgs),
    /// Tag every paragraph of a corpus with a trained model.
    Tag {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Group tagged spans of one label by normalized text.
    Aggregate {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        label: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Population-threshold widths found in TEST spans.
    ReportThresholds {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        state: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Also list every interval found.
        #[arg(long)]
        list: bool,
    },
    /// Annotation task management.
    #[command(subcommand)]
    Tasks(TasksCommand),
    /// Compile a self-contained HTML task page for one paragraph.
    ExportAmt {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// `DOC_ID#PARAGRAPH`, e.g. `TN:§ 36-5-402#0`.
        #[arg(long)]
        paragraph_id: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        task_id: u64,
        /// Annotator settings (TOML).
        #[arg(long)]
        ui_config: Option<PathBuf>,
        /// Tagged corpus to take pre-tags from when the config enables them.
        #[arg(long)]
        tagged: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Annotated paragraphs: `{"text", "spans"}` lines or tagged documents.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    /// Gazetteer entries (TOML `entries = [...]`).
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum TasksCommand {
    /// Create one task per paragraph (idempotent).
    Create {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
        /// Annotations required per task.
        #[arg(long, default_value_t = 2)]
        required: u32,
        /// Only census-related paragraphs.
        #[arg(long)]
        census_only: bool,
        /// Specific `DOC_ID#PARAGRAPH` refs instead of the whole corpus.
        #[arg(long = "paragraph")]
        paragraphs: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub tagged: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Address to bind, e.g. 127.0.0.1:8080.
    #[arg(long)]
    pub listen: Option<String>,
    /// Token registry (TOML `token = "helper-id"`).
    #[arg(long, conflicts_with = "open_auth")]
    pub tokens: Option<PathBuf>,
    /// Accept any bearer token as the helper id.
    #[arg(long)]
    pub open_auth: bool,
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long)]
    pub ui_config: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let paths = config::Paths::load(cli.config.as_deref())?;
    use commands::*;
    match cli.command {
        Command::Ingest {
            manifest,
            out,
            keywords,
            policy,
            no_fetch,
        } => ingest(&paths, &manifest, out, keywords, policy, no_fetch),
        Command::FilterCensus { input, out, keywords } => filter_census(&paths, input, out, keywords),
        Command::Index { input, out } => index(&paths, input, out),
        Command::Train(args) => train(&paths, args),
        Command::Tag { model, input, out } => tag(&paths, model, input, out),
        Command::Aggregate { input, label, format, out } => aggregate(&paths, input, &label, format, out),
        Command::ReportThresholds {
            input,
            state,
            format,
            list,
        } => report_thresholds(&paths, input, state.as_deref(), format, list),
        Command::Tasks(TasksCommand::Create {
            corpus,
            store,
            required,
            census_only,
            paragraphs,
        }) => tasks_create(&paths, corpus, store, required, census_only, &paragraphs),
        Command::ExportAmt {
            corpus,
            paragraph_id,
            out,
            task_id,
            ui_config,
            tagged,
        } => export_amt(&paths, corpus, &paragraph_id, &out, task_id, ui_config, tagged),
        Command::Serve(args) => serve(&paths, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(m) | CliError::Data(m)) = &e;
            eprintln!("statelaw: {m}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run `statelaw --help` for usage");
            }
            ExitCode::from(e.code())
        }
    }
}
