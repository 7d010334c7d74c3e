use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_index, InterpretError, Result};
use crate::bundle::tokenize::{tokenize, TermOccurrence};
use crate::scalar::total_cmp;
use crate::Scalar;

pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_STRIDE: usize = 25;

/// φ with negatives clamped to zero and every column scaled to sum to one
/// (all-zero columns stay zero). Makes topics from differently scaled models comparable
/// when scoring individual words.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPhi<T>(Array2<T>);

impl<T: Scalar> NormalizedPhi<T> {
    pub fn new(phi: &Array2<T>) -> Self {
        let mut hat = phi.mapv(|v| v.max(T::zero()));
        for mut col in hat.columns_mut() {
            let total: T = col.iter().copied().sum();
            if total > T::zero() {
                col.mapv_inplace(|v| v / total);
            }
        }
        Self(hat)
    }

    pub fn n_topics(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, topic: usize, term: usize) -> T {
        self.0[[topic, term]]
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineWindow<T> {
    pub token_start: usize,
    pub token_end: usize,
    /// Sums to one, or all zero with `empty` set.
    pub distribution: Vec<T>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline<T> {
    pub windows: Vec<TimelineWindow<T>>,
}

/// Sliding-window topic profile of a document.
///
/// `tokens` holds one entry per document token: the vocabulary index, or `None`
/// when the token is out of vocabulary. Windows start at `0, stride, 2·stride, …`
/// and the grid stops after the first window that reaches the end, so the last
/// window may be partial. If `stride > window` the window is widened to `stride`
/// so consecutive windows still tile the sequence.
pub fn document_timeline<T: Scalar>(
    tokens: &[Option<usize>],
    phi: &NormalizedPhi<T>,
    window: usize,
    stride: usize,
) -> Result<Timeline<T>> {
    if window == 0 || stride == 0 {
        return Err(InterpretError::InvalidArgument(
            "window and stride must be at least 1",
        ));
    }
    if let Some(&m) = tokens.iter().flatten().find(|&&m| m >= phi.n_terms()) {
        return Err(InterpretError::OutOfRange {
            what: "term",
            index: m,
            len: phi.n_terms(),
        });
    }
    let width = window.max(stride);
    let n = phi.n_topics();
    let mut windows = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let end = (start + width).min(tokens.len());
        let mut scores = vec![T::zero(); n];
        for &m in tokens[start..end].iter().flatten() {
            for (t, s) in scores.iter_mut().enumerate() {
                *s += phi.get(t, m);
            }
        }
        let total: T = scores.iter().copied().sum();
        let empty = !(total > T::zero());
        if empty {
            scores.iter_mut().for_each(|s| *s = T::zero());
        } else {
            scores.iter_mut().for_each(|s| *s /= total);
        }
        windows.push(TimelineWindow {
            token_start: start,
            token_end: end,
            distribution: scores,
            empty,
        });
        if end == tokens.len() {
            break;
        }
        start += stride;
    }
    Ok(Timeline { windows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightSpan<T> {
    /// Byte offsets into the document text.
    pub start: usize,
    pub end: usize,
    pub term_index: usize,
    pub weight: T,
}

/// Spans of the document's most topic-relevant terms.
///
/// Terms are scored by `φ̂[topic, term] · count`, where `count` is the number of
/// occurrences in the document. The `max_terms` best terms with a positive score
/// (ties to the lower vocabulary index) are selected and every occurrence of them
/// is returned, ascending by start offset.
pub fn document_highlights<T: Scalar>(
    occurrences: &[TermOccurrence],
    phi: &NormalizedPhi<T>,
    topic: usize,
    max_terms: usize,
) -> Result<Vec<HighlightSpan<T>>> {
    check_index("topic", topic, phi.n_topics())?;
    if max_terms == 0 {
        return Err(InterpretError::InvalidArgument(
            "max_terms must be at least 1",
        ));
    }
    let mut counts: Vec<(usize, usize)> = Vec::new();
    let mut terms: Vec<usize> = occurrences.iter().map(|o| o.term).collect();
    terms.sort_unstable();
    for m in terms {
        check_index("term", m, phi.n_terms())?;
        match counts.last_mut() {
            Some((t, c)) if *t == m => *c += 1,
            _ => counts.push((m, 1)),
        }
    }
    let mut scored: Vec<(usize, T)> = counts
        .into_iter()
        .map(|(m, c)| (m, phi.get(topic, m) * T::from_count(c)))
        .filter(|&(_, s)| s > T::zero())
        .collect();
    scored.sort_by(|a, b| total_cmp(b.1, a.1).then(a.0.cmp(&b.0)));
    scored.truncate(max_terms);

    let mut spans: Vec<HighlightSpan<T>> = occurrences
        .iter()
        .filter_map(|o| {
            scored
                .iter()
                .find(|(m, _)| *m == o.term)
                .map(|&(m, w)| HighlightSpan {
                    start: o.start,
                    end: o.end,
                    term_index: m,
                    weight: w,
                })
        })
        .collect();
    spans.sort_by_key(|s| s.start);
    Ok(spans)
}

/// The first `max_chars` characters of `text`, cut back to the start of a token
/// when the limit falls inside one.
pub fn snippet(text: &str, max_chars: usize) -> &str {
    let cut = text
        .char_indices()
        .nth(max_chars)
        .map_or(text.len(), |(i, _)| i);
    if cut == text.len() {
        return text;
    }
    let cut = tokenize(text)
        .iter()
        .find(|t| t.start < cut && cut < t.end)
        .map_or(cut, |t| t.start);
    &text[..cut]
}
