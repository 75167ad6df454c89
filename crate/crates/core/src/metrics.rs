//! Detection accuracy against a gold annotation and utility preservation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::ProbabilitySource;
use crate::infotheory::{information_content, Bits, InformationContent};
use crate::taxonomy::Taxonomy;
use crate::term::CanonicalTerm;
use crate::text::TermOccurrence;

/// A percentage, or the reason it cannot be computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Score {
    Defined(f64),
    Undefined(String),
}

impl Score {
    fn undefined(reason: &str) -> Self {
        Score::Undefined(reason.to_string())
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Score::Defined(v) => Some(*v),
            Score::Undefined(_) => None,
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Defined(v) => write!(f, "{v:.1}%"),
            Score::Undefined(reason) => write!(f, "n/a ({reason})"),
        }
    }
}

/// `|S ∩ H| / |S| × 100`.
pub fn precision(detected: &BTreeSet<CanonicalTerm>, gold: &BTreeSet<CanonicalTerm>) -> Score {
    if detected.is_empty() {
        return Score::undefined("no terms detected");
    }
    let hits = detected.intersection(gold).count();
    Score::Defined(hits as f64 / detected.len() as f64 * 100.0)
}

/// `|S ∩ H| / |H| × 100`.
pub fn recall(detected: &BTreeSet<CanonicalTerm>, gold: &BTreeSet<CanonicalTerm>) -> Score {
    if gold.is_empty() {
        return Score::undefined("empty gold set");
    }
    let hits = detected.intersection(gold).count();
    Score::Defined(hits as f64 / gold.len() as f64 * 100.0)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(precision: &Score, recall: &Score) -> Score {
    match (precision, recall) {
        (Score::Defined(p), Score::Defined(r)) => {
            if p + r == 0.0 {
                Score::Defined(0.0)
            } else {
                Score::Defined(2.0 * r * p / (r + p))
            }
        }
        (Score::Undefined(reason), _) => Score::Undefined(format!("precision undefined: {reason}")),
        (_, Score::Undefined(reason)) => Score::Undefined(format!("recall undefined: {reason}")),
    }
}

/// System-detected (S) and gold (H) sensitive terms, both canonical.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionSets {
    pub detected: BTreeSet<CanonicalTerm>,
    pub gold: BTreeSet<CanonicalTerm>,
}

impl DetectionSets {
    pub fn new(
        detected: impl IntoIterator<Item = CanonicalTerm>,
        gold: impl IntoIterator<Item = CanonicalTerm>,
    ) -> Self {
        DetectionSets {
            detected: detected.into_iter().collect(),
            gold: gold.into_iter().collect(),
        }
    }

    pub fn precision(&self) -> Score {
        precision(&self.detected, &self.gold)
    }

    pub fn recall(&self) -> Score {
        recall(&self.detected, &self.gold)
    }

    pub fn f_measure(&self) -> Score {
        f_measure(&self.precision(), &self.recall())
    }
}

/// Summed IC of a document's term occurrences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Utility {
    pub bits: Bits,
    /// Occurrences of corpus-unseen terms, counted as zero bits.
    pub unseen_occurrences: usize,
}

pub fn utility<P>(occurrences: &[TermOccurrence], source: &P) -> Utility
where
    P: ProbabilitySource + ?Sized,
{
    let mut total = 0.0;
    let mut unseen = 0;
    for occ in occurrences {
        match information_content(source, &occ.canonical) {
            InformationContent::Seen(bits) => total += bits.0,
            InformationContent::Unseen => unseen += 1,
        }
    }
    Utility {
        bits: Bits(total),
        unseen_occurrences: unseen,
    }
}

/// `Utility(output) / Utility(original) × 100`.
pub fn utility_preservation(output: Bits, original: Bits) -> Score {
    if original.0 <= 0.0 {
        return Score::undefined("original document carries no information");
    }
    Score::Defined(output.0 / original.0 * 100.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationResult {
    pub precision_pct: Score,
    pub recall_pct: Score,
    pub f_measure_pct: Score,
    pub utility_original_bits: f64,
    pub utility_output_bits: f64,
    pub preservation_pct: Score,
}

impl EvaluationResult {
    pub fn new(sets: &DetectionSets, original: Bits, output: Bits) -> Self {
        let precision_pct = sets.precision();
        let recall_pct = sets.recall();
        let f_measure_pct = f_measure(&precision_pct, &recall_pct);
        EvaluationResult {
            precision_pct,
            recall_pct,
            f_measure_pct,
            utility_original_bits: original.0,
            utility_output_bits: output.0,
            preservation_pct: utility_preservation(output, original),
        }
    }
}

#[derive(Debug, Error)]
pub enum GoldError {
    #[error("cannot read gold file {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid gold file {path}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Expert annotation for one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub doc_id: String,
    pub sensitive_terms: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GoldFile {
    One(GoldAnnotation),
    Many(Vec<GoldAnnotation>),
}

impl GoldAnnotation {
    /// Sensitive terms canonicalized through `taxonomy`.
    pub fn canonical_terms(&self, taxonomy: &Taxonomy) -> BTreeSet<CanonicalTerm> {
        self.sensitive_terms
            .iter()
            .filter_map(|s| taxonomy.canonicalize(s))
            .collect()
    }

    /// Reads a single annotation object or an array of them.
    pub fn load_all(path: &Path) -> Result<Vec<GoldAnnotation>, GoldError> {
        let raw = std::fs::read(path).map_err(|source| GoldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let parsed: GoldFile = serde_json::from_slice(&raw).map_err(|source| GoldError::Json {
            path: path.display().to_string(),
            source,
        })?;
        Ok(match parsed {
            GoldFile::One(g) => vec![g],
            GoldFile::Many(v) => v,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::{f8, t};
    use crate::text::{ContextUnit, Document};
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<CanonicalTerm> {
        items.iter().map(|s| t(s)).collect()
    }

    fn pct(s: Score) -> f64 {
        s.value().unwrap()
    }

    #[test]
    fn precision_examples() {
        assert_eq!(pct(precision(&set(&["a", "b"]), &set(&["a"]))), 50.0);
        assert_eq!(pct(precision(&set(&["a", "b"]), &set(&["a", "b"]))), 100.0);
        assert!(precision(&set(&[]), &set(&["a"])).value().is_none());
    }

    #[test]
    fn recall_examples() {
        let r = pct(recall(&set(&["a"]), &set(&["a", "b", "c"])));
        assert!((r - 33.333).abs() < 0.001);
        assert!(recall(&set(&["a"]), &set(&[])).value().is_none());
        assert_eq!(pct(recall(&set(&["a", "b", "c"]), &set(&["a", "b"]))), 100.0);
    }

    #[test]
    fn f_measure_examples() {
        let f = |p, r| pct(f_measure(&Score::Defined(p), &Score::Defined(r)));
        assert!((f(100.0, 4.0) - 7.7).abs() <= 0.05);
        assert!((f(81.2, 96.3) - 88.1).abs() <= 0.05);
        assert_eq!(f(42.0, 42.0), 42.0);
        assert_eq!(f(0.0, 0.0), 0.0);
        let undefined = f_measure(&Score::undefined("x"), &Score::Defined(3.0));
        assert!(undefined.value().is_none());
        assert_eq!(undefined.to_string(), "n/a (precision undefined: x)");
    }

    #[test]
    fn utility_examples() {
        let (_, vocab, index) = f8();
        let doc = |text: &str| Document::new("d", text, &vocab, ContextUnit::Document);
        assert_eq!(utility(doc("aids hiv").occurrences(), &index).bits, Bits(3.0));
        assert_eq!(utility(doc("").occurrences(), &index).bits, Bits(0.0));
        assert_eq!(utility(doc("aids aids").occurrences(), &index).bits, Bits(2.0));
        let u = utility(doc("aids zebra").occurrences(), &index);
        assert_eq!(u.bits, Bits(1.0));
        assert_eq!(u.unseen_occurrences, 1);
    }

    #[test]
    fn preservation_examples() {
        let (_, vocab, index) = f8();
        let u = |text: &str| utility(Document::new("d", text, &vocab, ContextUnit::Document).occurrences(), &index).bits;
        let original = u("aids hiv fever");
        assert!((original.0 - 4.415).abs() < 1e-3);
        let redacted = pct(utility_preservation(u("fever"), original));
        // 1.415 / 4.415 is 32.05%, which rounds either way at one decimal
        assert!((redacted - 32.0).abs() <= 0.1);
        let sanitized = pct(utility_preservation(u("disease agent fever"), original));
        assert_eq!(format!("{sanitized:.1}"), "64.1");
        assert_eq!(pct(utility_preservation(original, original)), 100.0);
        assert!(utility_preservation(Bits(1.0), Bits(0.0)).value().is_none());
    }

    #[test]
    fn gold_file_forms() {
        let dir = tempfile::tempdir().unwrap();
        let one = dir.path().join("one.json");
        std::fs::write(&one, r#"{"doc_id": "d1", "sensitive_terms": ["AIDS", "Acquired Immunodeficiency Syndrome"]}"#).unwrap();
        let gold = GoldAnnotation::load_all(&one).unwrap();
        let (tax, _, _) = f8();
        assert_eq!(gold[0].canonical_terms(&tax), set(&["aids"]));

        let many = dir.path().join("many.json");
        std::fs::write(&many, r#"[{"doc_id": "a", "sensitive_terms": []}, {"doc_id": "b", "sensitive_terms": ["x"]}]"#).unwrap();
        assert_eq!(GoldAnnotation::load_all(&many).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn f_between_precision_and_recall(p in 0.1f64..100.0, r in 0.1f64..100.0) {
            let f = pct(f_measure(&Score::Defined(p), &Score::Defined(r)));
            prop_assert!(f >= p.min(r) - 1e-9 && f <= p.max(r) + 1e-9);
        }

        #[test]
        fn order_and_duplicates_do_not_matter(
            s in proptest::collection::vec(0u8..6, 0..10),
            h in proptest::collection::vec(0u8..6, 0..10),
        ) {
            let name = |i: &u8| t(&format!("t{i}"));
            let a = DetectionSets::new(s.iter().map(name), h.iter().map(name));
            let b = DetectionSets::new(
                s.iter().rev().chain(&s).map(name),
                h.iter().rev().chain(&h).map(name),
            );
            prop_assert_eq!(a.precision(), b.precision());
            prop_assert_eq!(a.recall(), b.recall());
        }
    }
}
