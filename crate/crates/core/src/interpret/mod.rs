//! Interpretation formulas over φ (topic × term) and Θ (document × topic).
//!
//! Every function here is a pure function of its inputs. Rankings break ties by
//! ascending index so results are reproducible.

mod documents;
mod groups;
mod topics;
mod words;

use thiserror::Error;

pub use documents::{
    document_highlights, document_timeline, snippet, HighlightSpan, NormalizedPhi, Timeline,
    TimelineWindow, DEFAULT_STRIDE, DEFAULT_WINDOW,
};
pub use groups::{
    group_topic_matrix, group_wordcloud_weights, GroupTopicMatrix, GROUP_WORDCLOUD_SIZE,
};
pub use topics::{
    dominant_topic, term_prevalence, top_k_terms, topic_dominance_counts, topic_importance,
    topic_summaries, RankedTerm, TopicSummary,
};
pub use words::{
    nearest_words, word_embedding, word_topic_distribution, Associations, TopicDistribution,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterpretError {
    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{what} index {index} out of range (0..{len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
}

pub type Result<T> = std::result::Result<T, InterpretError>;

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(InterpretError::OutOfRange { what, index, len })
    }
}

/// Indices of `scores` ranked by descending score, ties by ascending index.
pub(crate) fn rank_desc<T: crate::Scalar>(scores: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| crate::scalar::total_cmp(scores[b], scores[a]).then(a.cmp(&b)));
    idx
}
