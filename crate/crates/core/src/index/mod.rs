//! Context-level co-occurrence index over a reference corpus.
//!
//! Each context contributes at most one count per term. After direct
//! counting, postings are closed upward through the taxonomy so that an
//! occurrence of a specialization also counts as an occurrence of every
//! ancestor. Probabilities are ratios of context counts to the total number
//! of contexts.

mod codec;

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::taxonomy::{Fingerprint, Taxonomy};
use crate::term::CanonicalTerm;
use crate::text::{ContextUnit, Document};

pub use codec::FORMAT_VERSION;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus has more than {} contexts", u32::MAX)]
    TooManyContexts,
    #[error("index I/O on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index file is truncated")]
    Truncated,
    #[error("index checksum mismatch")]
    ChecksumMismatch,
    #[error("index was built with taxonomy {found}, but taxonomy {expected} was supplied")]
    FingerprintMismatch {
        expected: Fingerprint,
        found: Fingerprint,
    },
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

/// Source of marginal and joint occurrence probabilities.
///
/// [`CorpusIndex`] is the local implementation; remote hit-count providers
/// can implement the same interface.
pub trait ProbabilitySource {
    /// Size of the sample space.
    fn total_contexts(&self) -> u64;

    /// Number of contexts in which every term occurs. Unknown terms yield 0.
    fn joint_count(&self, terms: &[&CanonicalTerm]) -> u64;

    /// Fingerprint of the taxonomy used for generalization-aware counting.
    fn taxonomy_fingerprint(&self) -> Option<Fingerprint> {
        None
    }

    fn probability(&self, terms: &[&CanonicalTerm]) -> f64 {
        let total = self.total_contexts();
        if total == 0 {
            return 0.0;
        }
        self.joint_count(terms) as f64 / total as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusIndex {
    total_contexts: u64,
    postings: HashMap<CanonicalTerm, Vec<u32>>,
    counting_unit: ContextUnit,
    taxonomy_fingerprint: Fingerprint,
}

/// Incremental construction, one document at a time.
pub struct IndexBuilder<'a> {
    taxonomy: &'a Taxonomy,
    unit: ContextUnit,
    next_context: u64,
    postings: HashMap<CanonicalTerm, Vec<u32>>,
}

impl<'a> IndexBuilder<'a> {
    pub fn new(unit: ContextUnit, taxonomy: &'a Taxonomy) -> Self {
        IndexBuilder {
            taxonomy,
            unit,
            next_context: 0,
            postings: HashMap::new(),
        }
    }

    pub fn add_document(&mut self, doc: &Document) -> Result<(), IndexError> {
        let resegmented;
        let doc = if doc.unit() == self.unit {
            doc
        } else {
            resegmented = doc.with_unit(self.unit);
            &resegmented
        };
        let base = self.next_context;
        let contexts = doc.contexts().len() as u64;
        if base + contexts > u64::from(u32::MAX) {
            return Err(IndexError::TooManyContexts);
        }
        for occ in doc.occurrences() {
            let id = (base + occ.context_index as u64) as u32;
            let list = self.postings.entry(occ.canonical.clone()).or_default();
            // occurrences arrive in context order, so a check of the tail dedups
            if list.last() != Some(&id) {
                list.push(id);
            }
        }
        self.next_context += contexts;
        Ok(())
    }

    pub fn contexts_seen(&self) -> u64 {
        self.next_context
    }

    pub fn finish(self) -> Result<CorpusIndex, IndexError> {
        if self.next_context == 0 {
            return Err(IndexError::EmptyCorpus);
        }
        let mut postings = self.postings;
        close_over_taxonomy(&mut postings, self.taxonomy);
        Ok(CorpusIndex {
            total_contexts: self.next_context,
            postings,
            counting_unit: self.unit,
            taxonomy_fingerprint: self.taxonomy.fingerprint(),
        })
    }
}

/// Adds every posting of a term to all of its taxonomy ancestors.
fn close_over_taxonomy(postings: &mut HashMap<CanonicalTerm, Vec<u32>>, taxonomy: &Taxonomy) {
    let mut inherited: HashMap<CanonicalTerm, Vec<u32>> = HashMap::new();
    for (term, ids) in postings.iter() {
        for ancestor in taxonomy.generalizations(term) {
            inherited.entry(ancestor).or_default().extend_from_slice(ids);
        }
    }
    for (term, ids) in inherited {
        postings.entry(term).or_default().extend(ids);
    }
    for ids in postings.values_mut() {
        ids.sort_unstable();
        ids.dedup();
    }
}

/// Builds an index over `corpus_docs`, counting co-occurrence per `unit`.
pub fn build_index(
    corpus_docs: &[Document],
    unit: ContextUnit,
    taxonomy: &Taxonomy,
) -> Result<CorpusIndex, IndexError> {
    let mut builder = IndexBuilder::new(unit, taxonomy);
    for doc in corpus_docs {
        builder.add_document(doc)?;
    }
    builder.finish()
}

fn intersect_into(acc: &mut Vec<u32>, other: &[u32]) {
    let mut j = 0;
    acc.retain(|&id| {
        while j < other.len() && other[j] < id {
            j += 1;
        }
        j < other.len() && other[j] == id
    });
}

fn intersection_len(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

impl CorpusIndex {
    pub(crate) fn from_parts(
        total_contexts: u64,
        postings: HashMap<CanonicalTerm, Vec<u32>>,
        counting_unit: ContextUnit,
        taxonomy_fingerprint: Fingerprint,
    ) -> Self {
        CorpusIndex {
            total_contexts,
            postings,
            counting_unit,
            taxonomy_fingerprint,
        }
    }

    /// Sorted context ids of `term`; empty when the term never occurs.
    pub fn postings(&self, term: &CanonicalTerm) -> &[u32] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, term: &CanonicalTerm) -> u64 {
        self.postings(term).len() as u64
    }

    pub fn counting_unit(&self) -> ContextUnit {
        self.counting_unit
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.taxonomy_fingerprint
    }

    /// Number of distinct terms with at least one posting.
    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    /// Indexed terms in lexicographic order.
    pub fn terms(&self) -> Vec<&CanonicalTerm> {
        let mut terms: Vec<_> = self.postings.keys().collect();
        terms.sort();
        terms
    }

    pub fn verify_taxonomy(&self, taxonomy: &Taxonomy) -> Result<(), IndexError> {
        if self.taxonomy_fingerprint == taxonomy.fingerprint() {
            Ok(())
        } else {
            Err(IndexError::FingerprintMismatch {
                expected: taxonomy.fingerprint(),
                found: self.taxonomy_fingerprint,
            })
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| IndexError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Loads an index and checks that it was built with `taxonomy`.
    pub fn load(path: &Path, taxonomy: &Taxonomy) -> Result<Self, IndexError> {
        let index = Self::load_unchecked(path)?;
        index.verify_taxonomy(taxonomy)?;
        Ok(index)
    }

    /// Loads an index without checking the taxonomy fingerprint.
    pub fn load_unchecked(path: &Path) -> Result<Self, IndexError> {
        let bytes = std::fs::read(path).map_err(|source| IndexError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        codec::decode(bytes)
    }
}

impl ProbabilitySource for CorpusIndex {
    fn total_contexts(&self) -> u64 {
        self.total_contexts
    }

    fn joint_count(&self, terms: &[&CanonicalTerm]) -> u64 {
        let mut lists: Vec<&[u32]> = Vec::with_capacity(terms.len());
        for term in terms {
            match self.postings.get(*term) {
                Some(list) => lists.push(list),
                None => return 0,
            }
        }
        lists.sort_by_key(|l| l.len());
        lists.dedup();
        match lists.as_slice() {
            [] => self.total_contexts,
            [only] => only.len() as u64,
            [a, b] => intersection_len(a, b),
            [first, rest @ ..] => {
                let mut acc = first.to_vec();
                for list in rest {
                    intersect_into(&mut acc, list);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc.len() as u64
            }
        }
    }

    fn taxonomy_fingerprint(&self) -> Option<Fingerprint> {
        Some(self.taxonomy_fingerprint)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::text::{StopWords, Vocabulary};
    use proptest::prelude::*;

    pub(crate) const F8_TAXONOMY: &str = "ISA aids | disease\nISA hiv | virus\nISA virus | agent\n\
                                          SYN acquired immunodeficiency syndrome | aids\n";
    pub(crate) const F8_DOCS: [&str; 8] = [
        "aids hiv fever",
        "aids hiv",
        "aids transfusion fever",
        "aids transfusion",
        "disease",
        "disease",
        "transfusion agent",
        "fever agent",
    ];

    pub(crate) fn t(s: &str) -> CanonicalTerm {
        CanonicalTerm::new(s).unwrap()
    }

    pub(crate) fn f8() -> (Taxonomy, Vocabulary, CorpusIndex) {
        let tax = Taxonomy::parse(F8_TAXONOMY).unwrap();
        let vocab = Vocabulary::from_taxonomy(&tax, StopWords::default_list());
        let docs: Vec<_> = F8_DOCS
            .iter()
            .enumerate()
            .map(|(i, text)| Document::new(format!("d{}", i + 1), *text, &vocab, ContextUnit::Document))
            .collect();
        let index = build_index(&docs, ContextUnit::Document, &tax).unwrap();
        (tax, vocab, index)
    }

    #[test]
    fn f8_postings_and_closure() {
        let (_, _, index) = f8();
        assert_eq!(index.total_contexts(), 8);
        assert_eq!(index.postings(&t("aids")), [0, 1, 2, 3]);
        assert_eq!(index.postings(&t("disease")), [0, 1, 2, 3, 4, 5]);
        assert_eq!(index.postings(&t("virus")), [0, 1]);
        assert_eq!(index.postings(&t("agent")), [0, 1, 6, 7]);
        assert_eq!(index.postings(&t("fever")), [0, 2, 7]);
    }

    #[test]
    fn f8_probabilities() {
        let (_, _, index) = f8();
        assert_eq!(index.probability(&[&t("aids")]), 0.5);
        assert_eq!(
            index.probability(&[&t("aids"), &t("transfusion"), &t("fever")]),
            0.125
        );
        assert_eq!(index.probability(&[&t("unknown")]), 0.0);
        assert_eq!(
            index.probability(&[&t("aids"), &t("aids")]),
            index.probability(&[&t("aids")])
        );
    }

    #[test]
    fn single_document_corpus() {
        let tax = Taxonomy::empty();
        let vocab = Vocabulary::default();
        let doc = Document::new("d0", "fever", &vocab, ContextUnit::Document);
        let index = build_index(&[doc], ContextUnit::Document, &tax).unwrap();
        assert_eq!(index.total_contexts(), 1);
        assert_eq!(index.postings(&t("fever")), [0]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let err = build_index(&[], ContextUnit::Document, &Taxonomy::empty()).unwrap_err();
        assert!(matches!(err, IndexError::EmptyCorpus));
    }

    #[test]
    fn sentence_counting_unit() {
        let tax = Taxonomy::empty();
        let vocab = Vocabulary::default();
        let doc = Document::new("d", "Fever today. Transfusion later. Fever again.", &vocab, ContextUnit::Document);
        let index = build_index(&[doc], ContextUnit::Sentence, &tax).unwrap();
        assert_eq!(index.total_contexts(), 3);
        assert_eq!(index.postings(&t("fever")), [0, 2]);
        assert_eq!(index.counting_unit(), ContextUnit::Sentence);
    }

    #[test]
    fn closure_is_idempotent() {
        let (tax, _, index) = f8();
        let mut twice = index.postings.clone();
        close_over_taxonomy(&mut twice, &tax);
        assert_eq!(twice, index.postings);
    }

    #[test]
    fn fingerprint_check() {
        let (tax, _, index) = f8();
        index.verify_taxonomy(&tax).unwrap();
        let other = Taxonomy::parse("ISA aids | disease").unwrap();
        assert!(matches!(
            index.verify_taxonomy(&other),
            Err(IndexError::FingerprintMismatch { .. })
        ));
    }

    fn corpus() -> impl Strategy<Value = Vec<Vec<usize>>> {
        proptest::collection::vec(proptest::collection::vec(0usize..8, 1..6), 1..12)
    }

    proptest! {
        #[test]
        fn generalization_monotone_and_set_antimonotone(contexts in corpus()) {
            let tax = Taxonomy::parse("ISA w0 | w1\nISA w1 | w2\nISA w3 | w2\nISA w4 | w5").unwrap();
            let vocab = Vocabulary::new(StopWords::empty());
            let docs: Vec<_> = contexts
                .iter()
                .enumerate()
                .map(|(i, ws)| {
                    let text: Vec<String> = ws.iter().map(|w| format!("w{w}")).collect();
                    Document::new(format!("d{i}"), text.join(" "), &vocab, ContextUnit::Document)
                })
                .collect();
            let index = build_index(&docs, ContextUnit::Document, &tax).unwrap();
            for (child, parent) in tax.edges() {
                prop_assert!(index.probability(&[parent]) >= index.probability(&[child]));
                let p = index.postings(parent);
                prop_assert!(index.postings(child).iter().all(|id| p.binary_search(id).is_ok()));
            }
            let terms: Vec<_> = (0..8).map(|i| t(&format!("w{i}"))).collect();
            for a in &terms {
                prop_assert!(index.postings(a).iter().all(|&id| u64::from(id) < index.total_contexts()));
                for b in &terms {
                    let joint = index.probability(&[a, b]);
                    prop_assert!(joint <= index.probability(&[a]).min(index.probability(&[b])));
                    for c in &terms {
                        let three = index.probability(&[a, b, c]);
                        prop_assert!(three <= joint);
                    }
                }
            }
        }
    }
}
