use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_index, InterpretError, Result};
use crate::scalar::total_cmp;
use crate::Scalar;

/// Nearest-word query result. `zero_norm` is set when the query column itself has
/// zero norm, which is distinct from a valid query that found no neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Associations<T> {
    pub neighbors: Vec<(usize, T)>,
    pub zero_norm: bool,
}

/// A distribution over topics; `undefined` marks the uniform fallback used when
/// there was no positive mass to normalize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution<T> {
    pub values: Vec<T>,
    pub undefined: bool,
}

/// The φ column of `term`: its interpretable N-dimensional embedding, signs kept.
pub fn word_embedding<T: Scalar>(phi: &Array2<T>, term: usize) -> Result<Vec<T>> {
    check_index("term", term, phi.ncols())?;
    Ok(phi.column(term).to_vec())
}

fn column_norms<T: Scalar>(phi: &Array2<T>) -> Vec<T> {
    phi.columns()
        .into_iter()
        .map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect()
}

/// The `n` terms whose φ columns have the highest cosine similarity to `term`'s.
/// Zero-norm columns never appear; ties go to the lower term index.
pub fn nearest_words<T: Scalar>(phi: &Array2<T>, term: usize, n: usize) -> Result<Associations<T>> {
    check_index("term", term, phi.ncols())?;
    if n == 0 {
        return Err(InterpretError::InvalidArgument("n must be at least 1"));
    }
    let norms = column_norms(phi);
    if norms[term] == T::zero() {
        return Ok(Associations {
            neighbors: Vec::new(),
            zero_norm: true,
        });
    }
    let query = phi.column(term);
    let mut scored: Vec<(usize, T)> = (0..phi.ncols())
        .filter(|&m| m != term && norms[m] > T::zero())
        .map(|m| {
            let dot: T = query.iter().zip(phi.column(m)).map(|(&a, &b)| a * b).sum();
            let sim = dot / (norms[term] * norms[m]);
            (m, sim.max(-T::one()).min(T::one()))
        })
        .collect();
    scored.sort_by(|a, b| total_cmp(b.1, a.1).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(Associations {
        neighbors: scored,
        zero_norm: false,
    })
}

/// `p_t ∝ Σ_{w ∈ terms} max(φ[t,w], 0)`. With no positive mass the result is uniform
/// and flagged `undefined`.
pub fn word_topic_distribution<T: Scalar>(
    phi: &Array2<T>,
    terms: &[usize],
) -> Result<TopicDistribution<T>> {
    if terms.is_empty() {
        return Err(InterpretError::InvalidArgument(
            "term set must not be empty",
        ));
    }
    for &w in terms {
        check_index("term", w, phi.ncols())?;
    }
    let mut mass = vec![T::zero(); phi.nrows()];
    for &w in terms {
        for (acc, &v) in mass.iter_mut().zip(phi.column(w)) {
            *acc += v.max(T::zero());
        }
    }
    let total: T = mass.iter().copied().sum();
    if total > T::zero() {
        Ok(TopicDistribution {
            values: mass.into_iter().map(|v| v / total).collect(),
            undefined: false,
        })
    } else {
        let n = phi.nrows().max(1);
        Ok(TopicDistribution {
            values: vec![T::one() / T::from_count(n); phi.nrows()],
            undefined: true,
        })
    }
}
