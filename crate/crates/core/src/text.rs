//! Tokenization, context segmentation and term extraction.
//!
//! A [`Document`] is built once from raw text and never mutated. Every byte of
//! the input belongs to exactly one [`Token`]: word tokens are maximal runs of
//! letters, digits and apostrophes, whitespace runs form a single non-word
//! token, and every other character is a non-word token of its own.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::Taxonomy;
use crate::term::CanonicalTerm;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidEncoding { offset: usize },
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub is_word: bool,
    folded: String,
}

impl Token {
    /// Lowercased surface used for matching. Empty for non-word tokens.
    pub fn folded(&self) -> &str {
        &self.folded
    }

    fn is_whitespace(&self) -> bool {
        !self.is_word && self.surface.chars().all(char::is_whitespace)
    }

    fn newlines(&self) -> usize {
        self.surface.matches('\n').count()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

fn is_hyphen(s: &str) -> bool {
    matches!(s, "-" | "\u{2010}" | "\u{2011}")
}

/// Splits `raw_text` into tokens covering every byte of the input.
pub fn tokenize(raw_text: &str) -> Vec<Token> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Word,
        Space,
        Other,
    }
    let class_of = |c: char| {
        if is_word_char(c) {
            Class::Word
        } else if c.is_whitespace() {
            Class::Space
        } else {
            Class::Other
        }
    };

    let mut tokens = Vec::new();
    let mut chars = raw_text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        let class = class_of(c);
        let mut end = start + c.len_utf8();
        if class != Class::Other {
            while let Some(&(i, next)) = chars.peek() {
                if class_of(next) != class {
                    break;
                }
                end = i + next.len_utf8();
                chars.next();
            }
        }
        let surface = &raw_text[start..end];
        let is_word = class == Class::Word;
        tokens.push(Token {
            surface: surface.to_string(),
            start,
            end,
            is_word,
            folded: if is_word {
                surface.to_lowercase()
            } else {
                String::new()
            },
        });
    }
    tokens
}

/// Like [`tokenize`], but validates the encoding first.
pub fn tokenize_bytes(raw: &[u8]) -> Result<Vec<Token>, TextError> {
    let text = decode(raw)?;
    Ok(tokenize(text))
}

pub(crate) fn decode(raw: &[u8]) -> Result<&str, TextError> {
    std::str::from_utf8(raw).map_err(|e| TextError::InvalidEncoding {
        offset: e.valid_up_to(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ContextUnit {
    Sentence,
    Paragraph,
    #[default]
    Document,
}

impl ContextUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextUnit::Sentence => "sentence",
            ContextUnit::Paragraph => "paragraph",
            ContextUnit::Document => "document",
        }
    }
}

impl fmt::Display for ContextUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sentence" => Ok(ContextUnit::Sentence),
            "paragraph" => Ok(ContextUnit::Paragraph),
            "document" => Ok(ContextUnit::Document),
            other => Err(format!(
                "unknown context unit `{other}` (expected sentence, paragraph or document)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextSpan {
    pub unit: ContextUnit,
    pub token_range: Range<usize>,
}

fn is_terminal(token: &Token) -> bool {
    matches!(token.surface.as_str(), "." | "!" | "?")
}

fn starts_upper(token: &Token) -> bool {
    token.is_word && token.surface.chars().next().is_some_and(char::is_uppercase)
}

/// Partitions the token sequence into contexts of the given unit.
///
/// Spans without any word token are merged into a neighbour, so every
/// context holds at least one word unless the whole text has none.
pub fn segment_contexts(tokens: &[Token], unit: ContextUnit) -> Vec<ContextSpan> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let mut ends = Vec::new();
    match unit {
        ContextUnit::Document => {}
        ContextUnit::Paragraph => {
            for (i, tok) in tokens.iter().enumerate() {
                if tok.is_whitespace() && tok.newlines() >= 2 {
                    ends.push(i + 1);
                }
            }
        }
        ContextUnit::Sentence => {
            let mut i = 0;
            while i < tokens.len() {
                if !is_terminal(&tokens[i]) {
                    i += 1;
                    continue;
                }
                // "?!" and "..." close a sentence once, after the last mark
                let mut last = i;
                while last + 1 < tokens.len() && is_terminal(&tokens[last + 1]) {
                    last += 1;
                }
                let next = last + 1;
                let boundary = match tokens.get(next) {
                    None => true,
                    Some(ws) if ws.is_whitespace() => match tokens.get(next + 1) {
                        None => true,
                        Some(after) => starts_upper(after),
                    },
                    Some(_) => false,
                };
                if boundary {
                    ends.push(next);
                }
                i = next;
            }
        }
    }

    let mut ranges: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    for end in ends.into_iter().chain(std::iter::once(tokens.len())) {
        if end > start {
            ranges.push(start..end);
            start = end;
        }
    }

    let has_word = |r: &Range<usize>| tokens[r.clone()].iter().any(|t| t.is_word);
    let mut merged: Vec<Range<usize>> = Vec::with_capacity(ranges.len());
    let mut pending_start: Option<usize> = None;
    for r in ranges {
        if has_word(&r) {
            let start = pending_start.take().unwrap_or(r.start);
            merged.push(start..r.end);
        } else if let Some(prev) = merged.last_mut() {
            prev.end = r.end;
        } else {
            pending_start.get_or_insert(r.start);
        }
    }
    if let Some(start) = pending_start {
        // no word anywhere
        merged.push(start..tokens.len());
    }

    merged
        .into_iter()
        .map(|token_range| ContextSpan { unit, token_range })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermOccurrence {
    pub canonical: CanonicalTerm,
    pub token_range: Range<usize>,
    pub context_index: usize,
}

/// Function words that never start a term occurrence.
#[derive(Clone, Debug, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn empty() -> Self {
        StopWords(HashSet::new())
    }

    /// Parses one word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(|line| line.split('#').next().unwrap_or("").trim())
                .filter(|w| !w.is_empty())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let raw = std::fs::read(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(decode(&raw)?))
    }

    pub fn contains(&self, folded: &str) -> bool {
        self.0.contains(folded)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl StopWords {
    /// The built-in English list.
    pub fn default_list() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopWords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Known surface forms, keyed by their folded word sequence, plus the
/// stopword list. Drives longest-match term extraction.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    phrases: HashMap<String, CanonicalTerm>,
    max_words: usize,
    stopwords: StopWords,
}

/// Folded word sequence of `surface`, joined by single spaces.
pub(crate) fn phrase_key(surface: &str) -> Option<(String, usize)> {
    let words: Vec<String> = tokenize(surface)
        .into_iter()
        .filter(|t| t.is_word)
        .map(|t| t.folded)
        .collect();
    if words.is_empty() {
        None
    } else {
        let n = words.len();
        Some((words.join(" "), n))
    }
}

impl Vocabulary {
    pub fn new(stopwords: StopWords) -> Self {
        Vocabulary {
            phrases: HashMap::new(),
            max_words: 1,
            stopwords,
        }
    }

    /// Vocabulary holding every surface form the taxonomy knows about.
    pub fn from_taxonomy(taxonomy: &Taxonomy, stopwords: StopWords) -> Self {
        let mut vocab = Vocabulary::new(stopwords);
        vocab.extend_from_taxonomy(taxonomy);
        vocab
    }

    pub fn extend_from_taxonomy(&mut self, taxonomy: &Taxonomy) {
        for surface in taxonomy.surfaces() {
            let canonical = taxonomy.canonicalize(surface);
            if let Some(canonical) = canonical {
                self.insert(surface, canonical);
            }
        }
    }

    /// Adds terms (corpus vocabulary, protected entities), canonicalized
    /// through `taxonomy`.
    pub fn extend_terms<'a, I>(&mut self, taxonomy: &Taxonomy, terms: I)
    where
        I: IntoIterator<Item = &'a CanonicalTerm>,
    {
        for term in terms {
            if let Some(canonical) = taxonomy.canonicalize(term.as_str()) {
                self.insert(term.as_str(), canonical);
            }
        }
    }

    /// Maps `surface` to `canonical`. The first mapping for a word sequence wins.
    pub fn insert(&mut self, surface: &str, canonical: CanonicalTerm) {
        if let Some((key, words)) = phrase_key(surface) {
            self.max_words = self.max_words.max(words);
            self.phrases.entry(key).or_insert(canonical);
        }
    }

    pub fn lookup(&self, key: &str) -> Option<&CanonicalTerm> {
        self.phrases.get(key)
    }

    pub fn stopwords(&self) -> &StopWords {
        &self.stopwords
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new(StopWords::default_list())
    }
}

/// Whether the non-word tokens between two words allow them to belong to
/// the same phrase: whitespace without a blank line, or hyphens.
fn joinable(gap: &[Token]) -> bool {
    gap.iter()
        .all(|t| (t.is_whitespace() && t.newlines() <= 1) || is_hyphen(&t.surface))
}

/// Greedy left-to-right longest match of vocabulary phrases over word tokens.
/// Unmatched non-stopword words become occurrences of themselves. Context
/// indices are left at zero.
fn match_terms(tokens: &[Token], vocab: &Vocabulary) -> Vec<TermOccurrence> {
    let words: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_word)
        .map(|(i, _)| i)
        .collect();

    let mut out = Vec::new();
    let mut p = 0;
    while p < words.len() {
        let first = &tokens[words[p]];
        if vocab.stopwords.contains(first.folded()) {
            p += 1;
            continue;
        }

        // longest run of joinable words starting at p, capped by the longest phrase
        let mut reach = 1;
        while reach < vocab.max_words
            && p + reach < words.len()
            && joinable(&tokens[words[p + reach - 1] + 1..words[p + reach]])
        {
            reach += 1;
        }

        let mut matched = None;
        for len in (1..=reach).rev() {
            let mut key = String::from(first.folded());
            for &w in &words[p + 1..p + len] {
                key.push(' ');
                key.push_str(tokens[w].folded());
            }
            if let Some(canonical) = vocab.lookup(&key) {
                matched = Some((canonical.clone(), len));
                break;
            }
        }
        let (canonical, len) = match matched {
            Some(m) => m,
            None => match CanonicalTerm::new(first.folded()) {
                Some(c) => (c, 1),
                None => {
                    p += 1;
                    continue;
                }
            },
        };
        out.push(TermOccurrence {
            canonical,
            token_range: words[p]..words[p + len - 1] + 1,
            context_index: 0,
        });
        p += len;
    }
    out
}

fn assign_contexts(occurrences: &mut [TermOccurrence], contexts: &[ContextSpan]) {
    for occ in occurrences {
        let start = occ.token_range.start;
        occ.context_index = contexts.partition_point(|c| c.token_range.end <= start);
    }
}

/// Tokenized text with its contexts and term occurrences.
#[derive(Clone, Debug)]
pub struct Document {
    doc_id: String,
    raw_text: String,
    tokens: Vec<Token>,
    contexts: Vec<ContextSpan>,
    occurrences: Vec<TermOccurrence>,
    unit: ContextUnit,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        raw_text: impl Into<String>,
        vocab: &Vocabulary,
        unit: ContextUnit,
    ) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text);
        let contexts = segment_contexts(&tokens, unit);
        let mut occurrences = match_terms(&tokens, vocab);
        assign_contexts(&mut occurrences, &contexts);
        Document {
            doc_id: doc_id.into(),
            raw_text,
            tokens,
            contexts,
            occurrences,
            unit,
        }
    }

    pub fn from_bytes(
        doc_id: impl Into<String>,
        raw: &[u8],
        vocab: &Vocabulary,
        unit: ContextUnit,
    ) -> Result<Self, TextError> {
        Ok(Self::new(doc_id, decode(raw)?, vocab, unit))
    }

    /// Same document segmented with another unit; occurrences are unchanged
    /// except for their context indices.
    pub fn with_unit(&self, unit: ContextUnit) -> Document {
        let contexts = segment_contexts(&self.tokens, unit);
        let mut occurrences = self.occurrences.clone();
        assign_contexts(&mut occurrences, &contexts);
        Document {
            doc_id: self.doc_id.clone(),
            raw_text: self.raw_text.clone(),
            tokens: self.tokens.clone(),
            contexts,
            occurrences,
            unit,
        }
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn contexts(&self) -> &[ContextSpan] {
        &self.contexts
    }

    pub fn occurrences(&self) -> &[TermOccurrence] {
        &self.occurrences
    }

    pub fn unit(&self) -> ContextUnit {
        self.unit
    }

    /// Original text covered by an occurrence.
    pub fn surface(&self, occ: &TermOccurrence) -> &str {
        let start = self.tokens[occ.token_range.start].start;
        let end = self.tokens[occ.token_range.end - 1].end;
        &self.raw_text[start..end]
    }

    /// Distinct terms in first-occurrence order.
    pub fn distinct_terms(&self) -> Vec<&CanonicalTerm> {
        distinct(self.occurrences.iter())
    }

    /// Distinct terms of one context in first-occurrence order.
    pub fn context_terms(&self, context_index: usize) -> Vec<&CanonicalTerm> {
        distinct(
            self.occurrences
                .iter()
                .filter(|o| o.context_index == context_index),
        )
    }
}

fn distinct<'a>(occs: impl Iterator<Item = &'a TermOccurrence>) -> Vec<&'a CanonicalTerm> {
    let mut seen = HashSet::new();
    occs.map(|o| &o.canonical)
        .filter(|c| seen.insert(*c))
        .collect()
}

/// Term occurrences of an already tokenized document against `vocab`.
pub fn extract_terms(doc: &Document, vocab: &Vocabulary) -> Vec<TermOccurrence> {
    let mut occurrences = match_terms(&doc.tokens, vocab);
    assign_contexts(&mut occurrences, &doc.contexts);
    occurrences
}
