use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use csanitize_core::{
    information_content, CorpusIndex, Document, RiskError, SanitizationPolicy, SanitizationReport,
    SanitizeError, Sanitizer, Taxonomy, Vocabulary,
};
use rayon::prelude::*;

use crate::failure::{Failure, ResultExt, BUDGET, ENTITY_NOT_IN_CORPUS, INPUT, INTERNAL};
use crate::input::{read_documents, write_atomic, RawDocument};
use crate::{ModeArg, TextArgs, UnitArg};

#[derive(Args)]
pub struct RunArgs {
    #[arg(long, value_name = "FILE")]
    index: PathBuf,

    #[arg(long, value_name = "FILE")]
    taxonomy: PathBuf,

    /// Protected entity. Repeat for several.
    #[arg(long = "entity", required = true, value_name = "TERM")]
    entities: Vec<String>,

    /// Only 1/alpha of an entity's information may be revealed.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,

    #[arg(long, value_enum, default_value = "sanitize")]
    mode: ModeArg,

    /// Documents: files or directories of .txt files.
    #[arg(long = "in", required = true, num_args = 1.., value_name = "PATH")]
    inputs: Vec<PathBuf>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Unit within which term groups are evaluated.
    #[arg(long, alias = "unit", value_enum, default_value = "document")]
    context: UnitArg,

    /// Largest term group checked for joint disclosure.
    #[arg(long, default_value_t = 1)]
    group_max: usize,

    /// Treat terms the corpus never saw as fully disclosing.
    #[arg(long)]
    strict_unseen: bool,

    /// Subsets evaluated per context before giving up.
    #[arg(long, default_value_t = csanitize_core::risk::DEFAULT_GROUP_BUDGET)]
    group_budget: usize,

    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Do not write <doc>.report.json files.
    #[arg(long)]
    no_report: bool,

    #[command(flatten)]
    text: TextArgs,
}

fn policy(args: &RunArgs, taxonomy: &Taxonomy) -> Result<SanitizationPolicy, Failure> {
    let mut entities = Vec::new();
    for surface in &args.entities {
        let term = taxonomy
            .canonicalize(surface)
            .ok_or_else(|| Failure::input(format!("invalid entity `{surface}`")))?;
        entities.push(term);
    }
    let policy = SanitizationPolicy::new(entities, args.alpha)
        .input()?
        .with_mode(args.mode.into())
        .with_context_unit(args.context.into())
        .with_group_max(args.group_max)
        .input()?
        .with_strict_unseen(args.strict_unseen)
        .with_group_budget(args.group_budget);
    Ok(policy)
}

fn sanitize_failure(doc_id: &str, e: SanitizeError) -> Failure {
    let code = match &e {
        SanitizeError::Risk(RiskError::EntityNotInCorpus(_)) => ENTITY_NOT_IN_CORPUS,
        SanitizeError::Risk(RiskError::BudgetExceeded { .. }) => BUDGET,
        SanitizeError::TaxonomyMismatch { .. } => INPUT,
    };
    Failure::new(code, anyhow!(e).context(doc_id.to_string()))
}

struct Outcome {
    doc_id: String,
    verified: bool,
    summary: String,
}

fn process(
    raw: &RawDocument,
    sanitizer: &Sanitizer<'_, CorpusIndex>,
    index: &CorpusIndex,
    vocab: &Vocabulary,
    policy: &SanitizationPolicy,
    out_dir: &Path,
    write_report: bool,
) -> Result<Outcome, Failure> {
    let doc = Document::from_bytes(raw.doc_id.as_str(), &raw.bytes, vocab, policy.context_unit())
        .map_err(|e| Failure::input(format!("{}: {e}", raw.doc_id)))?;
    let sanitized = sanitizer
        .sanitize(&doc, policy)
        .map_err(|e| sanitize_failure(&raw.doc_id, e))?;
    let report = SanitizationReport::new(&doc, &sanitized, index);

    let text_path = out_dir.join(format!("{}.sanitized.txt", raw.doc_id));
    write_atomic(&text_path, sanitized.output_text.as_bytes())
        .with_context(|| format!("cannot write {}", text_path.display()))
        .input()?;
    if write_report {
        let report_path = out_dir.join(format!("{}.report.json", raw.doc_id));
        write_atomic(&report_path, report.to_json().as_bytes())
            .with_context(|| format!("cannot write {}", report_path.display()))
            .input()?;
    }

    let preservation = report
        .utility
        .preservation_pct
        .map_or_else(|| "n/a".to_string(), |p| format!("{p:.1}%"));
    Ok(Outcome {
        doc_id: raw.doc_id.clone(),
        verified: sanitized.is_verified(),
        summary: format!(
            "{}: {} finding(s), {} replacement(s), utility preserved {preservation}{}",
            raw.doc_id,
            report.findings.len(),
            report.replacements.len(),
            if sanitized.is_verified() { "" } else { ", VERIFICATION FAILED" }
        ),
    })
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let taxonomy = Taxonomy::load(&args.taxonomy).input()?;
    let policy = policy(&args, &taxonomy)?;
    let index = CorpusIndex::load(&args.index, &taxonomy).input()?;
    for entity in policy.entities() {
        if information_content(&index, entity).is_unseen() {
            return Err(Failure::new(
                ENTITY_NOT_IN_CORPUS,
                anyhow!("protected entity `{entity}` does not occur in the reference corpus"),
            ));
        }
    }
    let vocab = Vocabulary::from_taxonomy(&taxonomy, args.text.stopwords()?);
    let docs = read_documents(&args.inputs, args.text.lines)?;
    if docs.is_empty() {
        return Err(Failure::input("no input documents"));
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .input()?;

    let sanitizer = Sanitizer::new(&index, &taxonomy, &vocab).input()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::new(INTERNAL, e))?;
    let results: Vec<Result<Outcome, Failure>> = pool.install(|| {
        docs.par_iter()
            .map(|raw| process(raw, &sanitizer, &index, &vocab, &policy, &args.out, !args.no_report))
            .collect()
    });

    let mut first_failure = None;
    let mut unverified = Vec::new();
    for result in results {
        match result {
            Ok(outcome) => {
                println!("{}", outcome.summary);
                if !outcome.verified {
                    unverified.push(outcome.doc_id);
                }
            }
            Err(failure) => {
                eprintln!("csanitize: {:#}", failure.error);
                first_failure.get_or_insert(failure);
            }
        }
    }
    if let Some(failure) = first_failure {
        return Err(failure);
    }
    if !unverified.is_empty() {
        return Err(Failure::new(
            INTERNAL,
            anyhow!("verification failed for: {}", unverified.join(", ")),
        ));
    }
    Ok(())
}

