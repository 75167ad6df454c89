//! Information-theoretic redaction and sanitization of plain-text documents.
//!
//! Terms of a document are scored by how much of a protected entity's
//! information content they reveal, measured as point-wise mutual
//! information over a reference corpus. A document is `(alpha, C)`-sanitized
//! when no term, and no group of co-occurring terms, reveals `1/alpha` or
//! more of the information content of any entity in `C`. Risky terms are
//! either removed or replaced by the most specific taxonomy generalization
//! that stays below that bound.
//!
//! ```
//! use csanitize_core::{
//!     build_index, CanonicalTerm, ContextUnit, Document, SanitizationPolicy, Sanitizer,
//!     StopWords, Taxonomy, Vocabulary,
//! };
//!
//! let taxonomy = Taxonomy::parse("ISA aids | disease\nISA hiv | virus\nISA virus | agent").unwrap();
//! let vocab = Vocabulary::from_taxonomy(&taxonomy, StopWords::default_list());
//! let corpus: Vec<_> = ["aids hiv fever", "aids hiv", "aids transfusion fever", "aids transfusion",
//!                       "disease", "disease", "transfusion agent", "fever agent"]
//!     .iter()
//!     .map(|text| Document::new("c", *text, &vocab, ContextUnit::Document))
//!     .collect();
//! let index = build_index(&corpus, ContextUnit::Document, &taxonomy).unwrap();
//!
//! let policy = SanitizationPolicy::new([CanonicalTerm::new("aids").unwrap()], 1.0).unwrap();
//! let doc = Document::new("d", "aids hiv fever", &vocab, ContextUnit::Document);
//! let out = Sanitizer::new(&index, &taxonomy, &vocab).unwrap().sanitize(&doc, &policy).unwrap();
//! assert_eq!(out.output_text, "disease agent fever");
//! ```

pub mod index;
pub mod infotheory;
pub mod metrics;
pub mod report;
pub mod risk;
pub mod sanitize;
pub mod taxonomy;
mod term;
pub mod text;

pub use index::{build_index, CorpusIndex, IndexBuilder, IndexError, ProbabilitySource};
pub use infotheory::{information_content, pmi, pmi_group, Bits, EntityNotInCorpus, InformationContent};
pub use metrics::{
    f_measure, precision, recall, utility, utility_preservation, DetectionSets, EvaluationResult,
    GoldAnnotation, Score, Utility,
};
pub use report::SanitizationReport;
pub use risk::{
    detect, is_risky_term, risky_groups, risky_terms, Detection, FindingKind, Mode, PolicyError,
    RiskError, RiskFinding, SanitizationPolicy,
};
pub use sanitize::{select_generalization, Replacement, SanitizeError, SanitizedDocument, Sanitizer};
pub use taxonomy::{Fingerprint, Taxonomy, TaxonomyError};
pub use term::CanonicalTerm;
pub use text::{
    extract_terms, segment_contexts, tokenize, tokenize_bytes, ContextSpan, ContextUnit, Document,
    StopWords, TermOccurrence, TextError, Token, Vocabulary,
};
