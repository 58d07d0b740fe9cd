//! `critique`: operator entry point.
//!
//! Every subcommand reads an optional `--config app.toml` (the same file the
//! server uses), then applies `CRITIQUE_*` environment variables, then flags.
//! Failures print one JSON `{"code","message","retriable"}` line to stderr
//! and exit with a code derived from `code`.

mod commands;

use clap::{Args, Parser, Subcommand};
use critique_server::{ApiError, ErrorCode};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "critique", version, about = "Critique interpretation, argument retrieval and evaluation")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Flags that mirror keys of the config file.
#[derive(Args, Clone, Default)]
pub struct Overrides {
    /// Config file; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `hashbag[:DIM]`, `cassette:PATH` or `http:URL`.
    #[arg(long, global = true)]
    pub embedder: Option<String>,
    /// `cassette:PATH`, `rules:PATH`, `echo:TEXT` or `http:URL`.
    #[arg(long, global = true)]
    pub provider: Option<String>,
    /// JSONL exemplars for the few-shot prompt.
    #[arg(long, global = true)]
    pub exemplars: Option<PathBuf>,
    /// Completions sampled per critique (1..=3).
    #[arg(long, global = true)]
    pub n_trials: Option<usize>,
    /// Append live completion exchanges to this cassette.
    #[arg(long, global = true)]
    pub record: Option<PathBuf>,
    /// Saved index snapshot.
    #[arg(long, global = true)]
    pub index: Option<PathBuf>,
    #[arg(long, global = true)]
    pub restaurants: Option<PathBuf>,
    #[arg(long, global = true)]
    pub reviews: Option<PathBuf>,
    /// `lexicon`, `constant:X` or `http:URL`.
    #[arg(long, global = true)]
    pub positivity: Option<String>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub min_rating: Option<u8>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Segment and filter reviews into argument candidates (JSONL).
    Ingest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and save a candidate index.
    Index {
        #[command(subcommand)]
        cmd: IndexCmd,
    },
    /// Restate a critique as a positive preference.
    Transform {
        #[arg(long)]
        critique: String,
        /// Print the full interpretation result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Rank persuasive arguments for a statement.
    Search(commands::SearchArgs),
    /// Critique datasets.
    Dataset {
        #[command(subcommand)]
        cmd: DatasetCmd,
    },
    /// Evaluation.
    Eval {
        #[command(subcommand)]
        cmd: EvalCmd,
    },
    /// Run the HTTP server.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Multi-round session in the terminal, one critique per input line.
    Chat(commands::ChatArgs),
}

#[derive(Subcommand)]
enum IndexCmd {
    Build {
        /// Candidates from `ingest`; otherwise built from --reviews.
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Draw contradiction-free compound critiques from singles.
    Gen(commands::GenArgs),
    /// Import a CSV of critiques.
    Convert {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Ablation and cross-validated ranking report.
    Run(commands::EvalArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_max_level(level).with_target(false).init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Ingest { out } => commands::ingest(&cli.opts, out),
        Command::Index {
            cmd: IndexCmd::Build { candidates, out },
        } => commands::index_build(&cli.opts, candidates, out),
        Command::Transform { critique, json } => commands::transform(&cli.opts, &critique, json),
        Command::Search(args) => commands::search(&cli.opts, args),
        Command::Dataset { cmd: DatasetCmd::Gen(args) } => commands::dataset_gen(args),
        Command::Dataset {
            cmd: DatasetCmd::Convert { csv, out },
        } => commands::dataset_convert(csv, out),
        Command::Eval { cmd: EvalCmd::Run(args) } => commands::eval_run(&cli.opts, args),
        Command::Serve { port, host } => commands::serve(&cli.opts, port, &host),
        Command::Chat(args) => commands::chat(&cli.opts, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(e.code.exit_code())
        }
    }
}

pub type CliResult<T = ()> = Result<T, ApiError>;

pub fn bad_input(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(ErrorCode::BadInput, e.to_string())
}
