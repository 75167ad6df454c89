use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use clap::Args;
use csanitize_core::{Document, IndexBuilder, IndexError, ProbabilitySource, Taxonomy, Vocabulary};
use rayon::prelude::*;

use crate::failure::{Failure, ResultExt, INTERNAL};
use crate::input::read_documents;
use crate::{TextArgs, UnitArg};

#[derive(Args)]
pub struct IndexArgs {
    /// Corpus files or directories of .txt files.
    #[arg(long, required = true, num_args = 1..)]
    corpus: Vec<PathBuf>,

    #[arg(long, value_name = "FILE")]
    taxonomy: PathBuf,

    /// Counting unit for co-occurrence.
    #[arg(long, alias = "context", value_enum, default_value = "document")]
    unit: UnitArg,

    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    #[command(flatten)]
    text: TextArgs,
}

pub fn run(args: IndexArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let taxonomy = Taxonomy::load(&args.taxonomy).input()?;
    let vocab = Vocabulary::from_taxonomy(&taxonomy, args.text.stopwords()?);
    let raw = read_documents(&args.corpus, args.text.lines)?;
    if raw.is_empty() {
        return Err(Failure::input("empty corpus"));
    }

    let unit = args.unit.into();
    let docs: Vec<Document> = raw
        .par_iter()
        .map(|d| Document::from_bytes(d.doc_id.as_str(), &d.bytes, &vocab, unit).map_err(|e| anyhow!("{}: {e}", d.doc_id)))
        .collect::<Result<_, _>>()
        .input()?;

    let mut builder = IndexBuilder::new(unit, &taxonomy);
    for doc in &docs {
        builder.add_document(doc).map_err(index_failure)?;
    }
    let index = builder.finish().map_err(index_failure)?;
    index.save(&args.out).map_err(index_failure)?;

    println!("contexts (N): {}", index.total_contexts());
    println!("vocabulary size: {}", index.vocabulary_size());
    println!("build time: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn index_failure(e: IndexError) -> Failure {
    match e {
        IndexError::TooManyContexts => Failure::new(INTERNAL, e),
        _ => Failure::new(crate::failure::INPUT, e),
    }
}
