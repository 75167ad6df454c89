//! ISA/SYN knowledge base.
//!
//! The file format is line oriented:
//!
//! ```text
//! # comment
//! ISA acquired immunodeficiency syndrome | immune system disease
//! SYN aids | acquired immunodeficiency syndrome
//! ```
//!
//! Fields are separated by ` | ` so multiword terms need no quoting. When both
//! terms are single words the pipe may be omitted (`ISA aids disease`).
//! The ISA relation must form a forest: every node has at most one parent and
//! there are no cycles. Synonyms are directional `alias -> canonical` entries
//! and are applied before ISA edges are stored, so the forest only holds
//! canonical terms.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::term::{normalize, CanonicalTerm};

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("cannot read taxonomy {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("taxonomy is not valid UTF-8 (byte offset {offset})")]
    Encoding { offset: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: `{child}` already has parent `{existing}`, cannot add `{parent}`")]
    MultipleParents {
        line: usize,
        child: String,
        existing: String,
        parent: String,
    },
    #[error("line {line}: alias `{alias}` already maps to `{existing}`, cannot map to `{target}`")]
    ConflictingSynonym {
        line: usize,
        alias: String,
        existing: String,
        target: String,
    },
    #[error("ISA cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("synonym cycle: {}", .0.join(" -> "))]
    SynonymCycle(Vec<String>),
}

/// SHA-256 over the normalized edge and synonym lists.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub [u8; 32]);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

#[derive(Clone, Debug)]
pub struct Taxonomy {
    parents: HashMap<CanonicalTerm, CanonicalTerm>,
    // normalized alias -> canonical, already resolved to a fixed point
    synonyms: HashMap<String, CanonicalTerm>,
    roots: BTreeSet<CanonicalTerm>,
    fingerprint: Fingerprint,
}

#[derive(Default, Debug, Clone)]
pub struct TaxonomyBuilder {
    isa: Vec<(usize, String, String)>,
    syn: Vec<(usize, String, String)>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn isa(mut self, child: &str, parent: &str) -> Self {
        let line = self.isa.len() + self.syn.len() + 1;
        self.isa.push((line, normalize(child), normalize(parent)));
        self
    }

    pub fn synonym(mut self, alias: &str, canonical: &str) -> Self {
        let line = self.isa.len() + self.syn.len() + 1;
        self.syn.push((line, normalize(alias), normalize(canonical)));
        self
    }

    pub fn build(self) -> Result<Taxonomy, TaxonomyError> {
        for (line, a, b) in self.isa.iter().chain(&self.syn) {
            if a.is_empty() || b.is_empty() {
                return Err(TaxonomyError::Malformed {
                    line: *line,
                    reason: "empty term".to_string(),
                });
            }
        }
        let synonyms = resolve_synonyms(&self.syn)?;
        let canon = |s: &str| -> CanonicalTerm {
            synonyms
                .get(s)
                .cloned()
                .unwrap_or_else(|| CanonicalTerm::new(s).expect("validated non-empty"))
        };

        let mut parents: HashMap<CanonicalTerm, CanonicalTerm> = HashMap::new();
        for (line, child, parent) in &self.isa {
            let child = canon(child);
            let parent = canon(parent);
            if child == parent {
                return Err(TaxonomyError::Cycle(vec![
                    child.to_string(),
                    parent.to_string(),
                ]));
            }
            match parents.get(&child) {
                Some(existing) if *existing == parent => {}
                Some(existing) => {
                    return Err(TaxonomyError::MultipleParents {
                        line: *line,
                        child: child.to_string(),
                        existing: existing.to_string(),
                        parent: parent.to_string(),
                    })
                }
                None => {
                    parents.insert(child, parent);
                }
            }
        }
        check_acyclic(&parents)?;

        let roots = parents
            .values()
            .filter(|p| !parents.contains_key(*p))
            .cloned()
            .collect();
        let fingerprint = fingerprint(&parents, &synonyms);
        Ok(Taxonomy {
            parents,
            synonyms,
            roots,
            fingerprint,
        })
    }
}

fn resolve_synonyms(
    entries: &[(usize, String, String)],
) -> Result<HashMap<String, CanonicalTerm>, TaxonomyError> {
    let mut direct: HashMap<&str, &str> = HashMap::new();
    for (line, alias, target) in entries {
        if alias == target {
            continue;
        }
        match direct.get(alias.as_str()) {
            Some(existing) if *existing == target => {}
            Some(existing) => {
                return Err(TaxonomyError::ConflictingSynonym {
                    line: *line,
                    alias: alias.clone(),
                    existing: existing.to_string(),
                    target: target.clone(),
                })
            }
            None => {
                direct.insert(alias, target);
            }
        }
    }

    let mut resolved = HashMap::with_capacity(direct.len());
    for &alias in direct.keys() {
        let mut path = vec![alias];
        let mut current = alias;
        while let Some(&next) = direct.get(current) {
            if path.contains(&next) {
                path.push(next);
                return Err(TaxonomyError::SynonymCycle(
                    path.into_iter().map(String::from).collect(),
                ));
            }
            path.push(next);
            current = next;
        }
        resolved.insert(
            alias.to_string(),
            CanonicalTerm::new(current).expect("validated non-empty"),
        );
    }
    Ok(resolved)
}

fn check_acyclic(parents: &HashMap<CanonicalTerm, CanonicalTerm>) -> Result<(), TaxonomyError> {
    // nodes already known to reach a root
    let mut settled: HashSet<&CanonicalTerm> = HashSet::new();
    let mut nodes: Vec<&CanonicalTerm> = parents.keys().collect();
    nodes.sort();
    for start in nodes {
        let mut path: Vec<&CanonicalTerm> = Vec::new();
        let mut current = start;
        loop {
            if settled.contains(current) {
                break;
            }
            if let Some(pos) = path.iter().position(|n| *n == current) {
                let mut cycle: Vec<String> = path[pos..].iter().map(|n| n.to_string()).collect();
                cycle.push(current.to_string());
                return Err(TaxonomyError::Cycle(cycle));
            }
            path.push(current);
            match parents.get(current) {
                Some(p) => current = p,
                None => break,
            }
        }
        settled.extend(path);
    }
    Ok(())
}

fn fingerprint(
    parents: &HashMap<CanonicalTerm, CanonicalTerm>,
    synonyms: &HashMap<String, CanonicalTerm>,
) -> Fingerprint {
    let mut edges: Vec<_> = parents.iter().collect();
    edges.sort();
    let mut syns: Vec<_> = synonyms.iter().collect();
    syns.sort();

    let mut hasher = Sha256::new();
    for (child, parent) in edges {
        hasher.update(format!("ISA\t{child}\t{parent}\n").as_bytes());
    }
    for (alias, target) in syns {
        hasher.update(format!("SYN\t{alias}\t{target}\n").as_bytes());
    }
    let digest = hasher.finalize();
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    Fingerprint(out)
}

fn split_fields(rest: &str) -> Option<(&str, &str)> {
    if let Some((a, b)) = rest.split_once('|') {
        return Some((a.trim(), b.trim()));
    }
    let mut words = rest.split_whitespace();
    match (words.next(), words.next(), words.next()) {
        (Some(a), Some(b), None) => Some((a, b)),
        _ => None,
    }
}

impl Taxonomy {
    pub fn builder() -> TaxonomyBuilder {
        TaxonomyBuilder::new()
    }

    /// A taxonomy with no edges and no synonyms.
    pub fn empty() -> Self {
        TaxonomyBuilder::new().build().expect("empty taxonomy is valid")
    }

    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        let mut builder = TaxonomyBuilder::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (keyword, rest) = content
                .split_once(char::is_whitespace)
                .unwrap_or((content, ""));
            let malformed = |reason: &str| TaxonomyError::Malformed {
                line,
                reason: reason.to_string(),
            };
            let (left, right) = split_fields(rest.trim())
                .ok_or_else(|| malformed("expected `<term> | <term>`"))?;
            if normalize(left).is_empty() || normalize(right).is_empty() {
                return Err(malformed("empty term"));
            }
            let entry = (line, normalize(left), normalize(right));
            match keyword {
                "ISA" => builder.isa.push(entry),
                "SYN" => builder.syn.push(entry),
                other => return Err(malformed(&format!("unknown record type `{other}`"))),
            }
        }
        builder.build()
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let raw = std::fs::read(path).map_err(|source| TaxonomyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let text = std::str::from_utf8(&raw).map_err(|e| TaxonomyError::Encoding {
            offset: e.valid_up_to(),
        })?;
        Self::parse(text)
    }

    /// Normalizes `surface` and maps it through the synonym table. `None`
    /// for blank input.
    pub fn canonicalize(&self, surface: &str) -> Option<CanonicalTerm> {
        let normalized = normalize(surface);
        if normalized.is_empty() {
            return None;
        }
        match self.synonyms.get(&normalized) {
            Some(target) => Some(target.clone()),
            None => CanonicalTerm::new(&normalized),
        }
    }

    pub fn parent(&self, term: &CanonicalTerm) -> Option<&CanonicalTerm> {
        self.parents.get(term)
    }

    /// Ancestor chain from the direct parent up to the root.
    pub fn generalizations(&self, term: &CanonicalTerm) -> Vec<CanonicalTerm> {
        let mut chain = Vec::new();
        let mut current = term;
        while let Some(parent) = self.parents.get(current) {
            chain.push(parent.clone());
            current = parent;
        }
        chain
    }

    pub fn is_strict_ancestor(&self, ancestor: &CanonicalTerm, term: &CanonicalTerm) -> bool {
        let mut current = term;
        while let Some(parent) = self.parents.get(current) {
            if parent == ancestor {
                return true;
            }
            current = parent;
        }
        false
    }

    pub fn roots(&self) -> &BTreeSet<CanonicalTerm> {
        &self.roots
    }

    pub fn contains(&self, term: &CanonicalTerm) -> bool {
        self.parents.contains_key(term) || self.roots.contains(term)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&CanonicalTerm, &CanonicalTerm)> {
        self.parents.iter()
    }

    /// Every surface form mentioned in the file: nodes, aliases and targets.
    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.parents
            .iter()
            .flat_map(|(c, p)| [c.as_str(), p.as_str()])
            .chain(
                self.synonyms
                    .iter()
                    .flat_map(|(a, t)| [a.as_str(), t.as_str()]),
            )
    }

    /// Length of the longest ancestor chain.
    pub fn height(&self) -> usize {
        self.parents
            .keys()
            .map(|k| self.generalizations(k).len())
            .max()
            .unwrap_or(0)
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }
}
