use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{InterpretError, Result};
use crate::bundle::DocTermMatrix;
use crate::Scalar;

/// Top-N cut for group wordclouds.
pub const GROUP_WORDCLOUD_SIZE: usize = 100;

/// `G[i,j] = Σ_k Θ[k,j]·I(g_k = i)`, groups in first-appearance order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTopicMatrix<T> {
    pub groups: Vec<String>,
    /// Row-major |groups|×N.
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> GroupTopicMatrix<T> {
    pub fn index_of(&self, group: &str) -> Option<usize> {
        self.groups.iter().position(|g| g == group)
    }

    pub fn to_array(&self) -> Array2<T> {
        let n = self.values.first().map_or(0, Vec::len);
        Array2::from_shape_fn((self.groups.len(), n), |(i, j)| self.values[i][j])
    }
}

pub fn group_topic_matrix<T: Scalar, S: AsRef<str>>(
    theta: ArrayView2<'_, T>,
    labels: &[S],
) -> Result<GroupTopicMatrix<T>> {
    if labels.len() != theta.nrows() {
        return Err(InterpretError::DimensionMismatch {
            what: "group labels",
            expected: theta.nrows(),
            actual: labels.len(),
        });
    }
    let mut groups: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut values: Vec<Vec<T>> = Vec::new();
    for (row, label) in theta.rows().into_iter().zip(labels) {
        let label = label.as_ref();
        let i = *index.entry(label.to_string()).or_insert_with(|| {
            groups.push(label.to_string());
            values.push(vec![T::zero(); theta.ncols()]);
            groups.len() - 1
        });
        for (acc, &v) in values[i].iter_mut().zip(row.iter()) {
            *acc += v;
        }
    }
    Ok(GroupTopicMatrix { groups, values })
}

/// Summed term counts over the group's documents: top 100 by count, ties by term
/// index, zero counts omitted.
pub fn group_wordcloud_weights<S: AsRef<str>>(
    doc_term: &DocTermMatrix,
    labels: &[S],
    group: &str,
) -> Result<Vec<(usize, u64)>> {
    if labels.len() != doc_term.n_docs() {
        return Err(InterpretError::DimensionMismatch {
            what: "group labels",
            expected: doc_term.n_docs(),
            actual: labels.len(),
        });
    }
    if !labels.iter().any(|l| l.as_ref() == group) {
        return Err(InterpretError::UnknownGroup(group.to_string()));
    }
    let mut totals = vec![0u64; doc_term.n_terms()];
    for (d, label) in labels.iter().enumerate() {
        if label.as_ref() == group {
            for &(m, c) in doc_term.row(d) {
                totals[m] += c;
            }
        }
    }
    let mut weights: Vec<(usize, u64)> = totals
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect();
    weights.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    weights.truncate(GROUP_WORDCLOUD_SIZE);
    Ok(weights)
}
