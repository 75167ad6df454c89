//! Replacement of risky terms by generalizations, or their removal.
//!
//! For every risky term the ancestor chain is walked from the most specific
//! generalization upward, and the first one that stays strictly below the
//! disclosure threshold of every protected entity is used. Terms without an
//! acceptable generalization are removed. After rewriting, the output is
//! re-analysed with the same policy; replacements that still take part in a
//! finding are turned into removals and the output is checked once more.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::index::ProbabilitySource;
use crate::infotheory::{pmi, Bits, EntityNotInCorpus};
use crate::risk::{
    detect, disclosure_threshold, Detection, FindingKind, Mode, RiskError, RiskFinding, SanitizationPolicy,
};
use crate::taxonomy::{Fingerprint, Taxonomy};
use crate::term::CanonicalTerm;
use crate::text::{Document, Token, Vocabulary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SanitizeError {
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("probability source was built with taxonomy {found}, not {expected}")]
    TaxonomyMismatch {
        expected: Fingerprint,
        found: Fingerprint,
    },
}

impl From<EntityNotInCorpus> for SanitizeError {
    fn from(e: EntityNotInCorpus) -> Self {
        SanitizeError::Risk(RiskError::EntityNotInCorpus(e))
    }
}

/// One generalization that was evaluated, with its PMI against every entity
/// in policy order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStep {
    pub term: CanonicalTerm,
    pub pmi_by_entity: Vec<Bits>,
    pub accepted: bool,
}

impl ChainStep {
    pub fn max_pmi(&self) -> Bits {
        self.pmi_by_entity
            .iter()
            .copied()
            .fold(Bits::NEG_INFINITY, |a, b| if b.0 > a.0 { b } else { a })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// `None` means the term is removed.
    pub replacement: Option<CanonicalTerm>,
    pub chain_tried: Vec<ChainStep>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Replacement {
    pub original: CanonicalTerm,
    /// `None` means removed.
    pub replacement: Option<CanonicalTerm>,
    pub chain_tried: Vec<ChainStep>,
    pub occurrences_rewritten: usize,
}

/// Most specific generalization of `term` that no entity finds risky.
pub fn select_generalization<P>(
    term: &CanonicalTerm,
    policy: &SanitizationPolicy,
    source: &P,
    taxonomy: &Taxonomy,
) -> Result<Selection, EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    let mut chain_tried = Vec::new();
    if policy.mode() == Mode::Redact {
        return Ok(Selection {
            replacement: None,
            chain_tried,
        });
    }
    let thresholds: Vec<Bits> = policy
        .entities()
        .iter()
        .map(|c| disclosure_threshold(source, c, policy.alpha()))
        .collect::<Result<_, _>>()?;

    for candidate in taxonomy.generalizations(term) {
        let pmi_by_entity: Vec<Bits> = policy
            .entities()
            .iter()
            .map(|c| pmi(source, c, &candidate))
            .collect::<Result<_, _>>()?;
        let unseen = policy.strict_unseen() && source.joint_count(&[&candidate]) == 0;
        let accepted = !unseen
            && pmi_by_entity
                .iter()
                .zip(&thresholds)
                .all(|(bits, threshold)| !bits.reaches(*threshold));
        chain_tried.push(ChainStep {
            term: candidate.clone(),
            pmi_by_entity,
            accepted,
        });
        if accepted {
            return Ok(Selection {
                replacement: Some(candidate),
                chain_tried,
            });
        }
    }
    Ok(Selection {
        replacement: None,
        chain_tried,
    })
}

#[derive(Clone, Debug)]
pub struct SanitizedDocument {
    pub doc_id: String,
    pub output_text: String,
    pub replacements: Vec<Replacement>,
    pub policy_snapshot: SanitizationPolicy,
    /// Findings on the input document.
    pub findings: Detection,
    /// Findings left in the output. Empty on success.
    pub residual_findings: Vec<RiskFinding>,
    /// Number of verification rounds run.
    pub verification_passes: usize,
    output: Document,
}

impl SanitizedDocument {
    pub fn is_verified(&self) -> bool {
        self.residual_findings.is_empty()
    }

    /// The output text, tokenized and term-extracted.
    pub fn output(&self) -> &Document {
        &self.output
    }
}

/// Sanitizes documents against a fixed probability source and taxonomy.
pub struct Sanitizer<'a, P: ?Sized> {
    source: &'a P,
    taxonomy: &'a Taxonomy,
    vocab: &'a Vocabulary,
}

impl<'a, P> Sanitizer<'a, P>
where
    P: ProbabilitySource + ?Sized,
{
    pub fn new(source: &'a P, taxonomy: &'a Taxonomy, vocab: &'a Vocabulary) -> Result<Self, SanitizeError> {
        if let Some(found) = source.taxonomy_fingerprint() {
            if found != taxonomy.fingerprint() {
                return Err(SanitizeError::TaxonomyMismatch {
                    expected: taxonomy.fingerprint(),
                    found,
                });
            }
        }
        Ok(Sanitizer {
            source,
            taxonomy,
            vocab,
        })
    }

    pub fn sanitize(
        &self,
        doc: &Document,
        policy: &SanitizationPolicy,
    ) -> Result<SanitizedDocument, SanitizeError> {
        let resegmented;
        let doc = if doc.unit() == policy.context_unit() {
            doc
        } else {
            resegmented = doc.with_unit(policy.context_unit());
            &resegmented
        };

        let findings = detect(doc, self.source, policy)?;
        let targets = self.targets(doc, &findings)?;
        let mut replacements = Vec::with_capacity(targets.len());
        for term in targets {
            let selection = select_generalization(&term, policy, self.source, self.taxonomy)?;
            replacements.push(Replacement {
                original: term,
                replacement: selection.replacement,
                chain_tried: selection.chain_tried,
                occurrences_rewritten: 0,
            });
        }

        // Each removal round strictly grows the set of removed terms, so this
        // terminates; one round is almost always enough.
        let mut passes = 0;
        let (output_text, output, residual) = loop {
            let output_text = rewrite(doc, &mut replacements);
            let output = Document::new(doc.doc_id(), output_text.as_str(), self.vocab, policy.context_unit());
            let residual = detect(&output, self.source, policy)?;
            passes += 1;
            if residual.is_empty() {
                break (output_text, output, residual);
            }
            log::debug!(
                "{}: {} residual finding(s) after rewrite pass {passes}, removing offending terms",
                doc.doc_id(),
                residual.len()
            );
            if !self.fall_back_to_removal(doc, &residual, &mut replacements)? {
                break (output_text, output, residual);
            }
        };

        if !residual.is_empty() {
            log::error!(
                "{}: {} finding(s) remain after removal pass",
                doc.doc_id(),
                residual.len()
            );
        }
        Ok(SanitizedDocument {
            doc_id: doc.doc_id().to_string(),
            output_text,
            replacements,
            policy_snapshot: policy.clone(),
            findings,
            residual_findings: residual.all().cloned().collect(),
            verification_passes: passes,
            output,
        })
    }

    /// Individually risky terms in document order, then one member per risky
    /// group: the one with the highest PMI against the group's entity, ties
    /// going to the earliest occurrence.
    fn targets(&self, doc: &Document, findings: &Detection) -> Result<Vec<CanonicalTerm>, SanitizeError> {
        let mut targets: Vec<CanonicalTerm> = findings
            .singles
            .iter()
            .flat_map(|f| f.terms.iter().cloned())
            .collect();
        let order: HashMap<&CanonicalTerm, usize> = doc
            .distinct_terms()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        for group in &findings.groups {
            let member = self.group_target(group, &order)?;
            if !targets.contains(member) {
                targets.push(member.clone());
            }
        }
        Ok(targets)
    }

    /// Group member with the highest PMI against the group's entity; ties go
    /// to the earliest occurrence.
    fn group_target<'f>(
        &self,
        group: &'f RiskFinding,
        order: &HashMap<&CanonicalTerm, usize>,
    ) -> Result<&'f CanonicalTerm, SanitizeError> {
        let mut best: Option<(&CanonicalTerm, Bits, usize)> = None;
        for member in &group.terms {
            let bits = pmi(self.source, &group.entity, member)?;
            let pos = order.get(member).copied().unwrap_or(usize::MAX);
            let better = match best {
                None => true,
                Some((_, b, p)) => bits.0 > b.0 || (bits.0 == b.0 && pos < p),
            };
            if better {
                best = Some((member, bits, pos));
            }
        }
        Ok(best.expect("group has members").0)
    }

    /// Turns replacements implicated in residual findings into removals. A
    /// finding that involves no replacement removes its own original term,
    /// or for a group the member `targets` would pick. Returns whether
    /// anything changed.
    fn fall_back_to_removal(
        &self,
        doc: &Document,
        residual: &Detection,
        replacements: &mut Vec<Replacement>,
    ) -> Result<bool, SanitizeError> {
        let order: HashMap<&CanonicalTerm, usize> = doc
            .distinct_terms()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        // what the output held when it was checked
        let substituted: HashSet<CanonicalTerm> =
            replacements.iter().filter_map(|r| r.replacement.clone()).collect();
        let mut changed = false;
        for finding in residual.all() {
            if finding.terms.iter().any(|t| substituted.contains(t)) {
                for r in replacements.iter_mut() {
                    if r.replacement.as_ref().is_some_and(|g| finding.terms.contains(g)) {
                        r.replacement = None;
                        changed = true;
                    }
                }
                continue;
            }
            let term = match finding.kind {
                FindingKind::Single => &finding.terms[0],
                FindingKind::Group => self.group_target(finding, &order)?,
            };
            match replacements.iter_mut().find(|r| &r.original == term) {
                Some(r) if r.replacement.is_some() => {
                    r.replacement = None;
                    changed = true;
                }
                Some(_) => {}
                None => {
                    replacements.push(Replacement {
                        original: term.clone(),
                        replacement: None,
                        chain_tried: Vec::new(),
                        occurrences_rewritten: 0,
                    });
                    changed = true;
                }
            }
        }
        Ok(changed)
    }
}



fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

fn upper_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn capitalize_like(original: &str, replacement: &str) -> String {
    if starts_upper(original) {
        upper_first(replacement)
    } else {
        replacement.to_string()
    }
}

fn is_space(token: &Token) -> bool {
    !token.is_word && token.surface.chars().all(char::is_whitespace)
}

fn is_inline_space(token: &Token) -> bool {
    is_space(token) && !token.surface.contains('\n')
}

#[derive(Clone, Copy, PartialEq)]
enum Action {
    Keep,
    Drop,
    Substitute(usize),
}

/// Rewrites every occurrence of a replaced term and updates the occurrence
/// counts. Removed terms take one adjacent whitespace run with them.
fn rewrite(doc: &Document, replacements: &mut [Replacement]) -> String {
    let tokens = doc.tokens();
    let by_term: HashMap<&CanonicalTerm, usize> = replacements
        .iter()
        .enumerate()
        .map(|(i, r)| (&r.original, i))
        .collect();

    let mut counts = vec![0usize; replacements.len()];
    let mut actions = vec![Action::Keep; tokens.len()];
    let mut removed_ranges = Vec::new();
    for occ in doc.occurrences() {
        let Some(&idx) = by_term.get(&occ.canonical) else {
            continue;
        };
        counts[idx] += 1;
        for a in &mut actions[occ.token_range.clone()] {
            *a = Action::Drop;
        }
        if replacements[idx].replacement.is_some() {
            actions[occ.token_range.start] = Action::Substitute(idx);
        } else {
            removed_ranges.push(occ.token_range.clone());
        }
    }

    for range in removed_ranges {
        let mut prev = range.start;
        let prev_kept = loop {
            if prev == 0 {
                break None;
            }
            prev -= 1;
            if actions[prev] != Action::Drop {
                break Some(prev);
            }
        };
        let next = (range.end < tokens.len() && actions[range.end] == Action::Keep).then_some(range.end);
        let next_space = next.filter(|&i| is_space(&tokens[i]));
        let prev_space = prev_kept.filter(|&i| actions[i] == Action::Keep && is_space(&tokens[i]));

        let victim = if next_space.is_some_and(|i| is_inline_space(&tokens[i])) {
            next_space
        } else if prev_space.is_some_and(|i| is_inline_space(&tokens[i])) {
            prev_space
        } else if prev_kept.is_none() {
            next_space
        } else if range.end >= tokens.len() {
            prev_space
        } else {
            None
        };
        if let Some(i) = victim {
            actions[i] = Action::Drop;
        }
    }

    for (r, n) in replacements.iter_mut().zip(counts) {
        r.occurrences_rewritten = n;
    }

    // A removed capitalized context opener passes its capital on, so that
    // sentence boundaries survive re-segmentation.
    let mut capitalize = vec![false; tokens.len()];
    for span in doc.contexts() {
        let mut words = span.token_range.clone().filter(|&i| tokens[i].is_word);
        let Some(first) = words.next() else {
            continue;
        };
        if actions[first] != Action::Drop || !starts_upper(&tokens[first].surface) {
            continue;
        }
        if let Some(heir) = words.find(|&i| actions[i] != Action::Drop) {
            capitalize[heir] = true;
        }
    }

    let mut out = String::with_capacity(doc.raw_text().len());
    for ((token, action), upper) in tokens.iter().zip(&actions).zip(capitalize) {
        let text = match *action {
            Action::Keep => token.surface.clone(),
            Action::Drop => continue,
            Action::Substitute(idx) => {
                let g = replacements[idx].replacement.as_ref().expect("substitution has a target");
                capitalize_like(&token.surface, g.as_str())
            }
        };
        if upper {
            out.push_str(&upper_first(&text));
        } else {
            out.push_str(&text);
        }
    }
    out
}
