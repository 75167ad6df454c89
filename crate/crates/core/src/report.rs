//! JSON decision report for one sanitized document.
//!
//! Non-finite information values (unseen terms, terms never co-occurring with
//! the entity) are written as `null`.

use serde::{Deserialize, Serialize};

use crate::index::ProbabilitySource;
use crate::infotheory::Bits;
use crate::metrics::{utility, utility_preservation};
use crate::risk::{FindingKind, Mode, RiskFinding};
use crate::sanitize::SanitizedDocument;
use crate::text::{ContextUnit, Document};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanitizationReport {
    pub doc_id: String,
    pub policy: PolicyReport,
    pub findings: Vec<FindingReport>,
    pub replacements: Vec<ReplacementReport>,
    pub utility: UtilityReport,
    pub verification: VerificationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub entities: Vec<String>,
    pub alpha: f64,
    pub mode: Mode,
    pub context_unit: ContextUnit,
    pub group_max: usize,
    pub strict_unseen: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FindingReport {
    pub kind: FindingKind,
    pub terms: Vec<String>,
    pub entity: String,
    pub pmi_bits: Option<f64>,
    pub threshold_bits: Option<f64>,
    pub context_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub term: String,
    pub max_pmi_bits: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplacementReport {
    pub original: String,
    pub replacement: Option<String>,
    pub occurrences_rewritten: usize,
    pub chain_tried: Vec<ChainReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub original_bits: f64,
    pub output_bits: f64,
    pub preservation_pct: Option<f64>,
    pub unseen_original_occurrences: usize,
    pub unseen_output_occurrences: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passes: usize,
    pub residual_count: usize,
}

fn finite(bits: Bits) -> Option<f64> {
    bits.finite()
}

impl From<&RiskFinding> for FindingReport {
    fn from(f: &RiskFinding) -> Self {
        FindingReport {
            kind: f.kind,
            terms: f.terms.iter().map(|t| t.to_string()).collect(),
            entity: f.entity.to_string(),
            pmi_bits: finite(f.pmi_bits),
            threshold_bits: finite(f.threshold_bits),
            context_index: f.context_index,
        }
    }
}

impl SanitizationReport {
    pub fn new<P>(original: &Document, sanitized: &SanitizedDocument, source: &P) -> Self
    where
        P: ProbabilitySource + ?Sized,
    {
        let policy = &sanitized.policy_snapshot;
        let before = utility(original.occurrences(), source);
        let after = utility(sanitized.output().occurrences(), source);
        SanitizationReport {
            doc_id: sanitized.doc_id.clone(),
            policy: PolicyReport {
                entities: policy.entities().iter().map(|e| e.to_string()).collect(),
                alpha: policy.alpha(),
                mode: policy.mode(),
                context_unit: policy.context_unit(),
                group_max: policy.group_max(),
                strict_unseen: policy.strict_unseen(),
            },
            findings: sanitized.findings.all().map(FindingReport::from).collect(),
            replacements: sanitized
                .replacements
                .iter()
                .map(|r| ReplacementReport {
                    original: r.original.to_string(),
                    replacement: r.replacement.as_ref().map(|g| g.to_string()),
                    occurrences_rewritten: r.occurrences_rewritten,
                    chain_tried: r
                        .chain_tried
                        .iter()
                        .map(|step| ChainReport {
                            term: step.term.to_string(),
                            max_pmi_bits: finite(step.max_pmi()),
                        })
                        .collect(),
                })
                .collect(),
            utility: UtilityReport {
                original_bits: before.bits.0,
                output_bits: after.bits.0,
                preservation_pct: utility_preservation(after.bits, before.bits).value(),
                unseen_original_occurrences: before.unseen_occurrences,
                unseen_output_occurrences: after.unseen_occurrences,
            },
            verification: VerificationReport {
                passes: sanitized.verification_passes,
                residual_count: sanitized.residual_findings.len(),
            },
        }
    }

    /// Every term named in a finding: the system-detected set S.
    pub fn detected_terms(&self) -> impl Iterator<Item = &str> {
        self.findings.iter().flat_map(|f| f.terms.iter().map(String::as_str))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::{f8, t};
    use crate::risk::SanitizationPolicy;
    use crate::sanitize::Sanitizer;

    #[test]
    fn fixture_report_fields() {
        let (tax, vocab, index) = f8();
        let doc = Document::new("doc-1", "aids hiv fever", &vocab, ContextUnit::Document);
        let policy = SanitizationPolicy::new([t("aids")], 1.0).unwrap();
        let out = Sanitizer::new(&index, &tax, &vocab).unwrap().sanitize(&doc, &policy).unwrap();
        let report = SanitizationReport::new(&doc, &out, &index);

        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["doc_id"], "doc-1");
        assert_eq!(json["policy"]["entities"][0], "aids");
        assert_eq!(json["policy"]["mode"], "sanitize");
        assert_eq!(json["policy"]["context_unit"], "document");
        assert_eq!(json["findings"].as_array().unwrap().len(), 2);
        assert_eq!(json["findings"][0]["kind"], "single");
        assert_eq!(json["findings"][1]["terms"][0], "hiv");
        assert_eq!(json["replacements"][1]["replacement"], "agent");
        assert_eq!(json["replacements"][1]["chain_tried"][0]["term"], "virus");
        assert_eq!(json["replacements"][1]["chain_tried"][0]["max_pmi_bits"], 1.0);
        assert_eq!(json["verification"]["residual_count"], 0);
        let pct = json["utility"]["preservation_pct"].as_f64().unwrap();
        assert_eq!(format!("{pct:.1}"), "64.1");

        let back: SanitizationReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
        let detected: Vec<_> = report.detected_terms().collect();
        assert_eq!(detected, ["aids", "hiv"]);
    }

    #[test]
    fn non_finite_values_become_null() {
        let (tax, vocab, index) = f8();
        let doc = Document::new("d", "zebra", &vocab, ContextUnit::Document);
        let policy = SanitizationPolicy::new([t("aids")], 1.0)
            .unwrap()
            .with_strict_unseen(true);
        let out = Sanitizer::new(&index, &tax, &vocab).unwrap().sanitize(&doc, &policy).unwrap();
        let report = SanitizationReport::new(&doc, &out, &index);
        assert_eq!(report.findings[0].pmi_bits, None);
        assert!(report.utility.preservation_pct.is_none());
        assert_eq!(report.utility.unseen_original_occurrences, 1);
        assert_eq!(out.output_text, "");
    }
}
