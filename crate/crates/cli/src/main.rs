//! `csanitize`: build corpus indexes, sanitize documents, evaluate reports.

mod eval;
mod failure;
mod index;
mod input;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csanitize_core::{ContextUnit, Mode, StopWords};

use crate::failure::{Failure, ResultExt};

#[derive(Parser)]
#[command(name = "csanitize", version, about = "Information-theoretic document sanitization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a reference-corpus index.
    Index(index::IndexArgs),
    /// Sanitize or redact documents.
    Run(run::RunArgs),
    /// Score sanitization reports against gold annotations.
    Eval(eval::EvalArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum UnitArg {
    Sentence,
    Paragraph,
    Document,
}

impl From<UnitArg> for ContextUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Sentence => ContextUnit::Sentence,
            UnitArg::Paragraph => ContextUnit::Paragraph,
            UnitArg::Document => ContextUnit::Document,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Sanitize,
    Redact,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sanitize => Mode::Sanitize,
            ModeArg::Redact => Mode::Redact,
        }
    }
}

/// Text input options shared by `index` and `run`.
#[derive(Args)]
struct TextArgs {
    /// Treat every non-empty line of an input file as its own document.
    #[arg(long)]
    lines: bool,

    /// Stopword file, one word per line. Defaults to a built-in English list.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
}

impl TextArgs {
    fn stopwords(&self) -> Result<StopWords, Failure> {
        match &self.stopwords {
            Some(path) => StopWords::load(path).input(),
            None => Ok(StopWords::default_list()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CSANITIZE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(args) => index::run(args),
        Command::Run(args) => run::run(args),
        Command::Eval(args) => eval::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("csanitize: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
