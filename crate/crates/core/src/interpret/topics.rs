use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_index, rank_desc, InterpretError, Result};
use crate::bundle::CorpusBundle;
use crate::scalar::total_cmp;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm<T> {
    pub term_id: usize,
    pub term: String,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary<T> {
    pub topic_id: usize,
    pub name: String,
    pub importance: T,
    pub top_terms: Vec<RankedTerm<T>>,
    /// Number of documents for which this is the dominant topic.
    pub dominant_documents: usize,
}

/// Corpus-level topic weight `s_t = Σ_d Θ[d,t]·|d|`, with `|d|` the document's
/// in-vocabulary token count. Not normalized.
pub fn topic_importance<T: Scalar>(
    theta: ArrayView2<'_, T>,
    doc_lengths: &[u64],
) -> Result<Vec<T>> {
    if doc_lengths.len() != theta.nrows() {
        return Err(InterpretError::DimensionMismatch {
            what: "document lengths",
            expected: theta.nrows(),
            actual: doc_lengths.len(),
        });
    }
    let mut s = vec![T::zero(); theta.ncols()];
    for (row, &len) in theta.rows().into_iter().zip(doc_lengths) {
        let len = T::from_u64(len).expect("length fits in float");
        for (acc, &v) in s.iter_mut().zip(row.iter()) {
            *acc += v * len;
        }
    }
    Ok(s)
}

/// The `k` highest-weighted terms of `topic` as `(term index, weight)`, weight
/// descending, ties by ascending term index. `k` is clamped to the vocabulary size.
pub fn top_k_terms<T: Scalar>(phi: &Array2<T>, topic: usize, k: usize) -> Result<Vec<(usize, T)>> {
    if k == 0 {
        return Err(InterpretError::InvalidArgument("k must be at least 1"));
    }
    check_index("topic", topic, phi.nrows())?;
    let row: Vec<T> = phi.row(topic).to_vec();
    let mut ranked = rank_desc(&row);
    ranked.truncate(k);
    Ok(ranked.into_iter().map(|m| (m, row[m])).collect())
}

/// Per-term column sum of `max(φ, 0)`: how much weight a term carries across all topics.
pub fn term_prevalence<T: Scalar>(phi: &Array2<T>) -> Vec<T> {
    phi.columns()
        .into_iter()
        .map(|col| col.iter().map(|&v| v.max(T::zero())).sum())
        .collect()
}

/// Argmax with ties broken by the lowest index. Returns 0 for an empty vector.
pub fn dominant_topic<T: Scalar>(weights: ArrayView1<'_, T>) -> usize {
    let mut best = 0;
    for (i, &w) in weights.iter().enumerate().skip(1) {
        if total_cmp(w, weights[best]).is_gt() {
            best = i;
        }
    }
    best
}

/// How many documents each topic dominates.
pub fn topic_dominance_counts<T: Scalar>(theta: ArrayView2<'_, T>) -> Vec<usize> {
    let mut counts = vec![0; theta.ncols()];
    if theta.ncols() == 0 {
        return counts;
    }
    for row in theta.rows() {
        counts[dominant_topic(row)] += 1;
    }
    counts
}

/// One summary per topic with the top `k` terms.
pub fn topic_summaries<T: Scalar>(
    bundle: &CorpusBundle<T>,
    importances: &[T],
    k: usize,
) -> Result<Vec<TopicSummary<T>>> {
    let dominance = topic_dominance_counts(bundle.theta.view());
    (0..bundle.n_topics())
        .map(|t| {
            let top_terms = top_k_terms(&bundle.phi, t, k)?
                .into_iter()
                .map(|(m, w)| RankedTerm {
                    term_id: m,
                    term: bundle.vocabulary[m].clone(),
                    weight: w,
                })
                .collect();
            Ok(TopicSummary {
                topic_id: t,
                name: bundle.topic_names[t].clone(),
                importance: importances[t],
                top_terms,
                dominant_documents: dominance[t],
            })
        })
        .collect()
}
