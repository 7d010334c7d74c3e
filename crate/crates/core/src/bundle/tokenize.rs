//! Built-in tokenizer and vocabulary matcher.
//!
//! Text is split into maximal runs of Unicode letters and digits (combining marks
//! attached to a run stay inside it). Each token is NFC-normalized and lowercased.
//! Vocabulary entries are tokenized the same way, so an entry such as `"new york"`
//! becomes the two-token sequence `[new, york]`. Matching is greedy longest-first;
//! every token belongs to at most one match.

use std::collections::HashMap;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::{CorpusBundle, DocTermMatrix};
use crate::Scalar;

/// A token of the source text, with byte offsets into the original (un-normalized) string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// A vocabulary match: `[start, end)` byte range in the source text, spanning
/// `tokens` consecutive tokens beginning at token position `first_token`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermOccurrence {
    pub start: usize,
    pub end: usize,
    pub first_token: usize,
    pub tokens: usize,
    pub term: usize,
}

fn normalize_token(raw: &str) -> String {
    raw.nfc().collect::<String>().to_lowercase()
}

/// Splits `text` into tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let word = c.is_alphanumeric() || (start.is_some() && is_combining_mark(c));
        match (word, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(Token {
                    start: s,
                    end: i,
                    text: normalize_token(&text[s..i]),
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            start: s,
            end: text.len(),
            text: normalize_token(&text[s..]),
        });
    }
    tokens
}

/// Lowercased, NFC-normalized token texts of `text`.
pub fn token_strings(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

/// Greedy longest-match-first lookup of vocabulary entries in token streams.
#[derive(Debug, Clone)]
pub struct TermMatcher {
    // token sequence joined by a single space (tokens never contain whitespace)
    entries: HashMap<String, usize>,
    max_len: usize,
    n_terms: usize,
}

impl TermMatcher {
    pub fn new<S: AsRef<str>>(vocabulary: &[S]) -> Self {
        let mut entries = HashMap::with_capacity(vocabulary.len());
        let mut max_len = 0;
        for (index, term) in vocabulary.iter().enumerate() {
            let seq = token_strings(term.as_ref());
            if seq.is_empty() {
                continue;
            }
            max_len = max_len.max(seq.len());
            // first entry wins when two vocabulary entries tokenize identically
            entries.entry(seq.join(" ")).or_insert(index);
        }
        Self {
            entries,
            max_len,
            n_terms: vocabulary.len(),
        }
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// Vocabulary index whose token sequence equals `tokens` exactly.
    pub fn lookup(&self, tokens: &[&str]) -> Option<usize> {
        self.entries.get(&tokens.join(" ")).copied()
    }

    /// All vocabulary occurrences in `tokens`, ascending by position.
    pub fn find_in_tokens(&self, tokens: &[Token]) -> Vec<TermOccurrence> {
        let mut out = Vec::new();
        let mut key = String::new();
        let mut pos = 0;
        while pos < tokens.len() {
            let longest = self.max_len.min(tokens.len() - pos);
            let mut matched = None;
            for len in (1..=longest).rev() {
                key.clear();
                for (i, tok) in tokens[pos..pos + len].iter().enumerate() {
                    if i > 0 {
                        key.push(' ');
                    }
                    key.push_str(&tok.text);
                }
                if let Some(&term) = self.entries.get(key.as_str()) {
                    matched = Some((term, len));
                    break;
                }
            }
            match matched {
                Some((term, len)) => {
                    out.push(TermOccurrence {
                        start: tokens[pos].start,
                        end: tokens[pos + len - 1].end,
                        first_token: pos,
                        tokens: len,
                        term,
                    });
                    pos += len;
                }
                None => pos += 1,
            }
        }
        out
    }

    pub fn find(&self, text: &str) -> Vec<TermOccurrence> {
        self.find_in_tokens(&tokenize(text))
    }

    /// One entry per token: the vocabulary index of a match starting at that token,
    /// `None` for out-of-vocabulary tokens and for the continuation tokens of a
    /// multiword match.
    pub fn token_terms(&self, text: &str) -> Vec<Option<usize>> {
        let tokens = tokenize(text);
        let mut out = vec![None; tokens.len()];
        for occ in self.find_in_tokens(&tokens) {
            out[occ.first_token] = Some(occ.term);
        }
        out
    }

    /// Sparse per-term counts for one text.
    pub fn count(&self, text: &str) -> Vec<(usize, u64)> {
        let mut counts: Vec<(usize, u64)> = Vec::new();
        let mut occ: Vec<usize> = self.find(text).into_iter().map(|o| o.term).collect();
        occ.sort_unstable();
        for term in occ {
            match counts.last_mut() {
                Some((t, c)) if *t == term => *c += 1,
                _ => counts.push((term, 1)),
            }
        }
        counts
    }
}

/// Counts vocabulary occurrences per document with the built-in tokenizer.
pub fn derive_doc_term<T: Scalar>(bundle: &CorpusBundle<T>) -> DocTermMatrix {
    let matcher = TermMatcher::new(&bundle.vocabulary);
    let rows = bundle
        .documents
        .iter()
        .map(|doc| matcher.count(&doc.text))
        .collect();
    DocTermMatrix::from_sorted_rows(bundle.vocabulary.len(), rows)
}
