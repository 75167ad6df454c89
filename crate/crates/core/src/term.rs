use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Normalized identity of a concept: lowercase, words separated by single spaces.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalTerm(String);

impl CanonicalTerm {
    /// Normalizes `surface` (lowercase, collapsed whitespace). Returns `None`
    /// when nothing but whitespace remains.
    pub fn new(surface: &str) -> Option<Self> {
        let normalized = normalize(surface);
        if normalized.is_empty() {
            None
        } else {
            Some(CanonicalTerm(normalized))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for CanonicalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for CanonicalTerm {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for CanonicalTerm {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub(crate) fn normalize(surface: &str) -> String {
    let mut out = String::with_capacity(surface.len());
    for word in surface.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_case_and_whitespace() {
        let t = CanonicalTerm::new("  Human \t Immunodeficiency\nVirus ").unwrap();
        assert_eq!(t.as_str(), "human immunodeficiency virus");
    }

    #[test]
    fn rejects_blank() {
        assert!(CanonicalTerm::new("   ").is_none());
        assert!(CanonicalTerm::new("").is_none());
    }
}
