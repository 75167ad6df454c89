use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use csanitize_core::{
    utility_preservation, Bits, CanonicalTerm, DetectionSets, EvaluationResult, GoldAnnotation, SanitizationReport,
    Score, Taxonomy,
};
use serde::Serialize;

use crate::failure::{Failure, ResultExt};
use crate::input::{expand, write_atomic};

#[derive(Args)]
pub struct EvalArgs {
    /// Report files, or directories holding *.report.json files.
    #[arg(long = "report", required = true, num_args = 1.., value_name = "PATH")]
    reports: Vec<PathBuf>,

    /// Gold annotation JSON: one object or an array of them.
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,

    /// Taxonomy used to canonicalize gold terms. Without it gold terms are
    /// only case- and whitespace-normalized.
    #[arg(long, value_name = "FILE")]
    taxonomy: Option<PathBuf>,

    /// Also write the results as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Serialize)]
struct DocResult {
    doc_id: String,
    detected: usize,
    gold: usize,
    #[serde(flatten)]
    result: EvaluationResult,
}

#[derive(Serialize)]
struct Summary {
    documents: Vec<DocResult>,
    overall: EvaluationResult,
}

fn load_reports(paths: &[PathBuf]) -> Result<Vec<SanitizationReport>, Failure> {
    let mut reports = Vec::new();
    for path in expand(paths, ".report.json")? {
        let raw = std::fs::read(&path)
            .with_context(|| format!("cannot read {}", path.display()))
            .input()?;
        let report: SanitizationReport = serde_json::from_slice(&raw)
            .with_context(|| format!("invalid report {}", path.display()))
            .input()?;
        reports.push(report);
    }
    if reports.is_empty() {
        return Err(Failure::input("no reports found"));
    }
    Ok(reports)
}

fn ratio(num: usize, den: usize, reason: &str) -> Score {
    if den == 0 {
        Score::Undefined(reason.to_string())
    } else {
        Score::Defined(num as f64 / den as f64 * 100.0)
    }
}

pub fn run(args: EvalArgs) -> Result<(), Failure> {
    let taxonomy = match &args.taxonomy {
        Some(path) => Some(Taxonomy::load(path).input()?),
        None => None,
    };
    let reports = load_reports(&args.reports)?;
    let gold_list = GoldAnnotation::load_all(&args.gold).input()?;

    let mut gold: BTreeMap<&str, BTreeSet<CanonicalTerm>> = BTreeMap::new();
    for g in &gold_list {
        let terms = match &taxonomy {
            Some(tax) => g.canonical_terms(tax),
            None => g.sensitive_terms.iter().filter_map(|s| CanonicalTerm::new(s)).collect(),
        };
        if gold.insert(g.doc_id.as_str(), terms).is_some() {
            return Err(Failure::input(format!("gold file lists `{}` twice", g.doc_id)));
        }
    }
    let report_ids: BTreeSet<&str> = reports.iter().map(|r| r.doc_id.as_str()).collect();
    let gold_ids: BTreeSet<&str> = gold.keys().copied().collect();
    if report_ids != gold_ids {
        let missing_gold: Vec<_> = report_ids.difference(&gold_ids).collect();
        let missing_reports: Vec<_> = gold_ids.difference(&report_ids).collect();
        return Err(Failure::input(format!(
            "document ids differ between reports and gold (no gold for {missing_gold:?}, no report for {missing_reports:?})"
        )));
    }

    let mut documents = Vec::new();
    let (mut hits, mut detected_total, mut gold_total) = (0, 0, 0);
    let (mut original_bits, mut output_bits) = (0.0, 0.0);
    for report in &reports {
        let sets = DetectionSets::new(
            report.detected_terms().filter_map(CanonicalTerm::new),
            gold[report.doc_id.as_str()].iter().cloned(),
        );
        hits += sets.detected.intersection(&sets.gold).count();
        detected_total += sets.detected.len();
        gold_total += sets.gold.len();
        original_bits += report.utility.original_bits;
        output_bits += report.utility.output_bits;
        documents.push(DocResult {
            doc_id: report.doc_id.clone(),
            detected: sets.detected.len(),
            gold: sets.gold.len(),
            result: EvaluationResult::new(
                &sets,
                Bits(report.utility.original_bits),
                Bits(report.utility.output_bits),
            ),
        });
    }

    let precision_pct = ratio(hits, detected_total, "no terms detected");
    let recall_pct = ratio(hits, gold_total, "empty gold set");
    let overall = EvaluationResult {
        f_measure_pct: csanitize_core::f_measure(&precision_pct, &recall_pct),
        precision_pct,
        recall_pct,
        utility_original_bits: original_bits,
        utility_output_bits: output_bits,
        preservation_pct: utility_preservation(Bits(output_bits), Bits(original_bits)),
    };

    println!(
        "{:<24} {:>4} {:>4} {:>10} {:>10} {:>10} {:>12}",
        "document", "|S|", "|H|", "precision", "recall", "F-measure", "preservation"
    );
    let row = |id: &str, s: String, h: String, r: &EvaluationResult| {
        println!(
            "{:<24} {:>4} {:>4} {:>10} {:>10} {:>10} {:>12}",
            id,
            s,
            h,
            r.precision_pct.to_string(),
            r.recall_pct.to_string(),
            r.f_measure_pct.to_string(),
            r.preservation_pct.to_string()
        );
    };
    for d in &documents {
        row(&d.doc_id, d.detected.to_string(), d.gold.to_string(), &d.result);
    }
    if documents.len() > 1 {
        row("(all)", detected_total.to_string(), gold_total.to_string(), &overall);
    }

    if let Some(path) = &args.json {
        let json = serde_json::to_string_pretty(&Summary { documents, overall }).expect("summary serializes");
        write_atomic(path, json.as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))
            .input()?;
    }
    Ok(())
}
