use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ManifoldError, Result};
use crate::scalar::total_cmp;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `1 − cos(x, y)`. A zero vector is at distance 1 from any nonzero vector and
    /// at distance 0 from another zero vector.
    Cosine,
    Euclidean,
}

/// Exact k nearest neighbours of every point, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph<T> {
    pub k: usize,
    pub metric: Metric,
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<T>>,
}

impl<T: Scalar> NeighborGraph<T> {
    pub fn n_points(&self) -> usize {
        self.indices.len()
    }
}

pub(crate) fn distance<T: Scalar>(metric: Metric, x: &[T], y: &[T], nx: T, ny: T) -> T {
    match metric {
        Metric::Euclidean => x
            .iter()
            .zip(y)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt(),
        Metric::Cosine => {
            let zero = T::zero();
            match (nx == zero, ny == zero) {
                (true, true) => zero,
                (true, false) | (false, true) => T::one(),
                (false, false) => {
                    let dot: T = x.iter().zip(y).map(|(&a, &b)| a * b).sum();
                    (T::one() - dot / (nx * ny)).max(zero)
                }
            }
        }
    }
}

/// Brute-force k-NN under `metric`. `k` is clamped to `P − 1`; distance ties go to
/// the lower index; a point is never its own neighbour.
pub fn knn_graph<T: Scalar>(
    points: ArrayView2<'_, T>,
    k: usize,
    metric: Metric,
) -> Result<NeighborGraph<T>> {
    let p = points.nrows();
    if p < 2 {
        return Err(ManifoldError::InsufficientPoints { min: 2, actual: p });
    }
    if k == 0 {
        return Err(ManifoldError::InvalidParameter(
            "k must be at least 1".into(),
        ));
    }
    let k = k.min(p - 1);
    let rows: Vec<Vec<T>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
    let norms: Vec<T> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect();

    let (indices, distances): (Vec<Vec<usize>>, Vec<Vec<T>>) = (0..p)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(T, usize)> = (0..p)
                .filter(|&j| j != i)
                .map(|j| (distance(metric, &rows[i], &rows[j], norms[i], norms[j]), j))
                .collect();
            let order = |a: &(T, usize), b: &(T, usize)| total_cmp(a.0, b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, order);
                cand.truncate(k);
            }
            cand.sort_by(order);
            cand.into_iter().map(|(d, j)| (j, d)).unzip()
        })
        .unzip();

    Ok(NeighborGraph {
        k,
        metric,
        indices,
        distances,
    })
}
