//! Detection of terms and term groups that disclose a protected entity.
//!
//! A term `t` is risky for entity `c` when `PMI(c;t) >= IC(c)/alpha`; a group
//! `T` is risky when `PMI(c;T) >= IC(c)/alpha`. Groups are only searched within
//! a single context and only among terms that are not risky on their own.

use std::collections::HashSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::ProbabilitySource;
use crate::infotheory::{information_content, pmi, pmi_group, Bits, EntityNotInCorpus};
use crate::term::CanonicalTerm;
use crate::text::{ContextUnit, Document};

pub const DEFAULT_GROUP_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("at least one protected entity is required")]
    NoEntities,
    #[error("alpha must be ≥ 1 (got {0})")]
    AlphaOutOfRange(f64),
    #[error("group size bound must be ≥ 1")]
    GroupMaxZero,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error(transparent)]
    EntityNotInCorpus(#[from] EntityNotInCorpus),
    #[error("group analysis budget of {budget} subsets exceeded in context {context_index}")]
    BudgetExceeded { context_index: usize, budget: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Remove risky terms.
    Redact,
    /// Replace risky terms by an acceptable generalization.
    #[default]
    Sanitize,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "redact" => Ok(Mode::Redact),
            "sanitize" => Ok(Mode::Sanitize),
            other => Err(format!("unknown mode `{other}` (expected redact or sanitize)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanitizationPolicy {
    entities: Vec<CanonicalTerm>,
    alpha: f64,
    mode: Mode,
    context_unit: ContextUnit,
    group_max: usize,
    strict_unseen: bool,
    #[serde(skip, default = "default_budget")]
    group_budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_GROUP_BUDGET
}

impl SanitizationPolicy {
    /// Entities must already be canonical; duplicates are dropped, keeping
    /// the first position.
    pub fn new(
        entities: impl IntoIterator<Item = CanonicalTerm>,
        alpha: f64,
    ) -> Result<Self, PolicyError> {
        let mut seen = HashSet::new();
        let entities: Vec<_> = entities
            .into_iter()
            .filter(|e| seen.insert(e.clone()))
            .collect();
        if entities.is_empty() {
            return Err(PolicyError::NoEntities);
        }
        // also rejects NaN
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(PolicyError::AlphaOutOfRange(alpha));
        }
        Ok(SanitizationPolicy {
            entities,
            alpha,
            mode: Mode::default(),
            context_unit: ContextUnit::default(),
            group_max: 1,
            strict_unseen: false,
            group_budget: DEFAULT_GROUP_BUDGET,
        })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_context_unit(mut self, unit: ContextUnit) -> Self {
        self.context_unit = unit;
        self
    }

    pub fn with_group_max(mut self, group_max: usize) -> Result<Self, PolicyError> {
        if group_max == 0 {
            return Err(PolicyError::GroupMaxZero);
        }
        self.group_max = group_max;
        Ok(self)
    }

    pub fn with_strict_unseen(mut self, strict: bool) -> Self {
        self.strict_unseen = strict;
        self
    }

    pub fn with_group_budget(mut self, budget: usize) -> Self {
        self.group_budget = budget;
        self
    }

    pub fn entities(&self) -> &[CanonicalTerm] {
        &self.entities
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn context_unit(&self) -> ContextUnit {
        self.context_unit
    }

    pub fn group_max(&self) -> usize {
        self.group_max
    }

    pub fn strict_unseen(&self) -> bool {
        self.strict_unseen
    }

    pub fn group_budget(&self) -> usize {
        self.group_budget
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FindingKind {
    Single,
    Group,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskFinding {
    pub kind: FindingKind,
    pub terms: Vec<CanonicalTerm>,
    pub entity: CanonicalTerm,
    pub pmi_bits: Bits,
    pub threshold_bits: Bits,
    pub context_index: Option<usize>,
}

/// Both sides of the disclosure comparison for one term and entity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskAssessment {
    pub risky: bool,
    pub pmi: Bits,
    pub threshold: Bits,
}

/// `IC(c)/alpha`.
pub fn disclosure_threshold<P>(
    source: &P,
    entity: &CanonicalTerm,
    alpha: f64,
) -> Result<Bits, EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    match information_content(source, entity) {
        crate::InformationContent::Seen(ic) => Ok(ic / alpha),
        crate::InformationContent::Unseen => Err(EntityNotInCorpus(entity.clone())),
    }
}

pub fn is_risky_term<P>(
    source: &P,
    term: &CanonicalTerm,
    entity: &CanonicalTerm,
    alpha: f64,
) -> Result<RiskAssessment, EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    let threshold = disclosure_threshold(source, entity, alpha)?;
    let pmi = pmi(source, entity, term)?;
    Ok(RiskAssessment {
        risky: pmi.reaches(threshold),
        pmi,
        threshold,
    })
}

fn thresholds<P>(source: &P, policy: &SanitizationPolicy) -> Result<Vec<Bits>, EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    policy
        .entities
        .iter()
        .map(|c| disclosure_threshold(source, c, policy.alpha))
        .collect()
}

/// First entity (in policy order) for which `term` is risky.
pub(crate) fn first_violation<P>(
    source: &P,
    policy: &SanitizationPolicy,
    thresholds: &[Bits],
    term: &CanonicalTerm,
) -> Result<Option<RiskFinding>, EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    let unseen = policy.strict_unseen && source.joint_count(&[term]) == 0;
    for (entity, &threshold) in policy.entities.iter().zip(thresholds) {
        let pmi_bits = if unseen {
            // treated as fully disclosing
            Bits::INFINITY
        } else {
            pmi(source, entity, term)?
        };
        if pmi_bits.reaches(threshold) {
            return Ok(Some(RiskFinding {
                kind: FindingKind::Single,
                terms: vec![term.clone()],
                entity: entity.clone(),
                pmi_bits,
                threshold_bits: threshold,
                context_index: None,
            }));
        }
    }
    Ok(None)
}

/// One finding per distinct risky document term, in first-occurrence order.
pub fn risky_terms<P>(
    doc: &Document,
    source: &P,
    policy: &SanitizationPolicy,
) -> Result<Vec<RiskFinding>, RiskError>
where
    P: ProbabilitySource + ?Sized,
{
    let thresholds = thresholds(source, policy)?;
    let mut findings = Vec::new();
    for term in doc.distinct_terms() {
        if let Some(finding) = first_violation(source, policy, &thresholds, term)? {
            findings.push(finding);
        }
    }
    Ok(findings)
}

/// Minimal risky groups of size `2..=group_max`, per context.
///
/// Candidates exclude individually risky terms and terms the corpus never
/// saw (they cannot co-occur with anything). Sizes are explored in increasing
/// order; once a group is reported its members do not take part in larger
/// groups.
pub fn risky_groups<P>(
    doc: &Document,
    source: &P,
    policy: &SanitizationPolicy,
) -> Result<Vec<RiskFinding>, RiskError>
where
    P: ProbabilitySource + ?Sized,
{
    let singles = risky_terms(doc, source, policy)?;
    risky_groups_excluding(doc, source, policy, &singles)
}

pub(crate) fn risky_groups_excluding<P>(
    doc: &Document,
    source: &P,
    policy: &SanitizationPolicy,
    singles: &[RiskFinding],
) -> Result<Vec<RiskFinding>, RiskError>
where
    P: ProbabilitySource + ?Sized,
{
    if policy.group_max < 2 {
        return Ok(Vec::new());
    }
    let thresholds = thresholds(source, policy)?;
    let risky: HashSet<&CanonicalTerm> = singles.iter().flat_map(|f| &f.terms).collect();

    let mut findings = Vec::new();
    for context_index in 0..doc.contexts().len() {
        let mut survivors: Vec<&CanonicalTerm> = doc
            .context_terms(context_index)
            .into_iter()
            .filter(|t| !risky.contains(t) && source.joint_count(&[t]) > 0)
            .collect();
        let mut evaluated = 0usize;

        for size in 2..=policy.group_max {
            if survivors.len() < size {
                break;
            }
            let mut grouped: HashSet<&CanonicalTerm> = HashSet::new();
            for group in survivors.iter().copied().combinations(size) {
                evaluated += 1;
                if evaluated > policy.group_budget {
                    return Err(RiskError::BudgetExceeded {
                        context_index,
                        budget: policy.group_budget,
                    });
                }
                for (entity, &threshold) in policy.entities.iter().zip(&thresholds) {
                    let bits = pmi_group(source, entity, &group)?;
                    if bits.reaches(threshold) {
                        grouped.extend(group.iter().copied());
                        findings.push(RiskFinding {
                            kind: FindingKind::Group,
                            terms: group.iter().map(|t| (*t).clone()).collect(),
                            entity: entity.clone(),
                            pmi_bits: bits,
                            threshold_bits: threshold,
                            context_index: Some(context_index),
                        });
                        break;
                    }
                }
            }
            survivors.retain(|t| !grouped.contains(t));
        }
    }
    Ok(findings)
}

/// Individual and group findings for a document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Detection {
    pub singles: Vec<RiskFinding>,
    pub groups: Vec<RiskFinding>,
}

impl Detection {
    pub fn is_empty(&self) -> bool {
        self.singles.is_empty() && self.groups.is_empty()
    }

    pub fn len(&self) -> usize {
        self.singles.len() + self.groups.len()
    }

    pub fn all(&self) -> impl Iterator<Item = &RiskFinding> {
        self.singles.iter().chain(&self.groups)
    }
}

pub fn detect<P>(
    doc: &Document,
    source: &P,
    policy: &SanitizationPolicy,
) -> Result<Detection, RiskError>
where
    P: ProbabilitySource + ?Sized,
{
    let singles = risky_terms(doc, source, policy)?;
    let groups = risky_groups_excluding(doc, source, policy, &singles)?;
    Ok(Detection { singles, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::{f8, t};

    fn policy(entities: &[&str], alpha: f64) -> SanitizationPolicy {
        SanitizationPolicy::new(entities.iter().map(|e| t(e)), alpha).unwrap()
    }

    fn term_names(findings: &[RiskFinding]) -> Vec<Vec<&str>> {
        findings
            .iter()
            .map(|f| f.terms.iter().map(|t| t.as_str()).collect())
            .collect()
    }

    #[test]
    fn policy_validation() {
        assert_eq!(
            SanitizationPolicy::new([t("aids")], 0.5).unwrap_err(),
            PolicyError::AlphaOutOfRange(0.5)
        );
        assert!(SanitizationPolicy::new([t("aids")], f64::NAN).is_err());
        assert_eq!(
            SanitizationPolicy::new(Vec::new(), 1.0).unwrap_err(),
            PolicyError::NoEntities
        );
        let p = SanitizationPolicy::new([t("aids"), t("hiv"), t("aids")], 1.0).unwrap();
        assert_eq!(p.entities(), [t("aids"), t("hiv")]);
        assert!(p.clone().with_group_max(0).is_err());
    }

    #[test]
    fn single_term_examples() {
        let (_, _, index) = f8();
        let aids = t("aids");
        assert!(is_risky_term(&index, &t("hiv"), &aids, 1.0).unwrap().risky);
        let tr = t("transfusion");
        assert!(!is_risky_term(&index, &tr, &aids, 1.0).unwrap().risky);
        assert!(!is_risky_term(&index, &tr, &aids, 2.0).unwrap().risky);
        let at = is_risky_term(&index, &tr, &aids, 2.5).unwrap();
        assert!(at.risky);
        assert!((at.threshold.0 - 0.4).abs() < 1e-12);
        for alpha in [1.0, 1.3, 7.0] {
            assert!(is_risky_term(&index, &aids, &aids, alpha).unwrap().risky);
        }
    }

    #[test]
    fn risky_terms_in_document_order() {
        let (_, vocab, index) = f8();
        let doc = Document::new("d", "aids hiv transfusion", &vocab, ContextUnit::Document);
        let found = risky_terms(&doc, &index, &policy(&["aids"], 1.0)).unwrap();
        assert_eq!(term_names(&found), [vec!["aids"], vec!["hiv"]]);
        assert!(found.iter().all(|f| f.entity == t("aids")));

        let found = risky_terms(&doc, &index, &policy(&["aids", "hiv"], 1.0)).unwrap();
        assert_eq!(term_names(&found), [vec!["aids"], vec!["hiv"]]);
        // hiv is risky for aids first
        assert_eq!(found[1].entity, t("aids"));
    }

    #[test]
    fn nothing_correlated() {
        let (_, vocab, index) = f8();
        let doc = Document::new("d", "quantum chromodynamics", &vocab, ContextUnit::Document);
        assert!(risky_terms(&doc, &index, &policy(&["aids"], 1.0)).unwrap().is_empty());
    }

    #[test]
    fn synonym_of_entity_is_risky() {
        let (_, vocab, index) = f8();
        let doc = Document::new(
            "d",
            "He had Acquired Immunodeficiency Syndrome.",
            &vocab,
            ContextUnit::Document,
        );
        let found = risky_terms(&doc, &index, &policy(&["aids"], 1.0)).unwrap();
        assert_eq!(term_names(&found), [vec!["aids"]]);
    }

    #[test]
    fn unseen_entity_propagates() {
        let (_, vocab, index) = f8();
        let doc = Document::new("d", "fever", &vocab, ContextUnit::Document);
        let err = risky_terms(&doc, &index, &policy(&["cancer"], 1.0)).unwrap_err();
        assert!(matches!(err, RiskError::EntityNotInCorpus(_)));
    }

    #[test]
    fn strict_unseen_flags_unknown_terms() {
        let (_, vocab, index) = f8();
        let doc = Document::new("d", "fever zebra", &vocab, ContextUnit::Document);
        let lax = policy(&["aids"], 1.0);
        assert!(risky_terms(&doc, &index, &lax).unwrap().is_empty());
        let strict = lax.with_strict_unseen(true);
        let found = risky_terms(&doc, &index, &strict).unwrap();
        assert_eq!(term_names(&found), [vec!["zebra"]]);
        assert_eq!(found[0].pmi_bits, Bits::INFINITY);
    }

    #[test]
    fn group_examples() {
        let (_, vocab, index) = f8();
        let doc = Document::new("d", "transfusion fever", &vocab, ContextUnit::Document);
        let p = policy(&["aids"], 1.0).with_group_max(2).unwrap();
        let found = risky_groups(&doc, &index, &p).unwrap();
        assert_eq!(term_names(&found), [vec!["transfusion", "fever"]]);
        assert_eq!(found[0].pmi_bits, Bits(1.0));
        assert_eq!(found[0].context_index, Some(0));

        let p1 = policy(&["aids"], 1.0);
        assert!(risky_groups(&doc, &index, &p1).unwrap().is_empty());

        let split = Document::new("d", "Transfusion given. Fever followed.", &vocab, ContextUnit::Sentence);
        let ps = p.with_context_unit(ContextUnit::Sentence);
        assert!(risky_groups(&split, &index, &ps).unwrap().is_empty());
    }

    #[test]
    fn grouped_terms_do_not_form_supersets() {
        let (_, vocab, index) = f8();
        let doc = Document::new("d", "transfusion fever agent", &vocab, ContextUnit::Document);
        let p = policy(&["aids"], 1.0).with_group_max(3).unwrap();
        let found = risky_groups(&doc, &index, &p).unwrap();
        assert_eq!(term_names(&found), [vec!["transfusion", "fever"]]);
    }

    #[test]
    fn budget_is_enforced() {
        let (_, vocab, index) = f8();
        let doc = Document::new("d", "transfusion fever agent virus", &vocab, ContextUnit::Document);
        let p = policy(&["hiv"], 1.0).with_group_max(3).unwrap().with_group_budget(2);
        let err = risky_groups(&doc, &index, &p).unwrap_err();
        assert_eq!(err, RiskError::BudgetExceeded { context_index: 0, budget: 2 });
    }
}
