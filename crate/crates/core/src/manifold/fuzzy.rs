use std::collections::BTreeMap;

use super::knn::NeighborGraph;
use super::{ManifoldError, Result};
use crate::Scalar;

pub const SMOOTH_KNN_TOLERANCE: f64 = 1e-5;
pub const SMOOTH_KNN_MAX_ITER: usize = 64;
/// σ never drops below this fraction of the mean neighbour distance.
pub const SIGMA_FLOOR_FRACTION: f64 = 1e-3;

/// Per-point calibration of the fuzzy neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothKnn<T> {
    pub rho: T,
    pub sigma: T,
    /// `Σ_j exp(−max(d_j − ρ, 0)/σ) − target` at the returned σ.
    pub residual: T,
    /// The bisection result fell under the floor and σ was raised to it.
    pub clamped: bool,
    pub iterations: usize,
}

/// Finds `ρ` (distance to the `local_connectivity`-th nearest neighbour) and `σ`
/// such that `Σ_j exp(−max(d_j − ρ, 0)/σ)` over all given neighbours equals `target`
/// (normally `log2(k)`), by bisection.
pub fn smooth_knn<T: Scalar>(
    distances: &[T],
    local_connectivity: usize,
    target: T,
) -> Result<SmoothKnn<T>> {
    if distances.is_empty() {
        return Err(ManifoldError::InvalidParameter(
            "smooth_knn needs at least one distance".into(),
        ));
    }
    if local_connectivity == 0 {
        return Err(ManifoldError::InvalidParameter(
            "local_connectivity must be at least 1".into(),
        ));
    }
    let zero = T::zero();
    let rho = distances[(local_connectivity - 1).min(distances.len() - 1)];
    let psum = |sigma: T| -> T {
        distances
            .iter()
            .map(|&d| {
                let gap = (d - rho).max(zero);
                if gap > zero {
                    (-gap / sigma).exp()
                } else {
                    T::one()
                }
            })
            .sum()
    };
    let tol = T::lit(SMOOTH_KNN_TOLERANCE);
    let (mut lo, mut hi, mut mid) = (zero, T::infinity(), T::one());
    let mut iterations = 0;
    let mut residual = psum(mid) - target;
    while iterations < SMOOTH_KNN_MAX_ITER {
        iterations += 1;
        residual = psum(mid) - target;
        if residual.abs() <= tol {
            break;
        }
        if residual > zero {
            hi = mid;
            mid = (lo + hi) / T::lit(2.0);
        } else {
            lo = mid;
            mid = if hi.is_infinite() {
                mid * T::lit(2.0)
            } else {
                (lo + hi) / T::lit(2.0)
            };
        }
    }
    let mean = distances.iter().copied().sum::<T>() / T::from_count(distances.len());
    let floor = (T::lit(SIGMA_FLOOR_FRACTION) * mean).max(T::epsilon());
    if mid < floor {
        return Ok(SmoothKnn {
            rho,
            sigma: floor,
            residual: psum(floor) - target,
            clamped: true,
            iterations,
        });
    }
    Ok(SmoothKnn {
        rho,
        sigma: mid,
        residual,
        clamped: false,
        iterations,
    })
}

/// Symmetric weighted graph in compressed-row form. Every edge appears in both rows,
/// weights lie in `(0, 1]`, and there are no self loops.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph<T> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<T>,
    pub rho: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Scalar> FuzzyGraph<T> {
    pub fn n_points(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.cols.len()
    }

    /// `(neighbour, weight)` pairs of point `i`, ascending by neighbour.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(pos) => self.weights[r.start + pos],
            Err(_) => T::zero(),
        }
    }

    /// All directed edges `(i, j, w)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_points()).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn degree(&self, i: usize) -> T {
        self.row(i).map(|(_, w)| w).sum()
    }
}

/// Probabilistic union `a + b − a·b` of a directed membership graph given as
/// `(i, j, w)` triplets over `n` points. Each unordered pair is combined exactly once;
/// self loops and zero weights are dropped, results are clamped to `[0, 1]`.
pub fn fuzzy_union<T: Scalar>(n: usize, directed: &[(usize, usize, T)]) -> Result<FuzzyGraph<T>> {
    let mut pairs: BTreeMap<(usize, usize), (T, T)> = BTreeMap::new();
    for &(i, j, w) in directed {
        if i >= n || j >= n {
            return Err(ManifoldError::InvalidParameter(format!(
                "edge ({i}, {j}) outside {n} points"
            )));
        }
        if i == j {
            continue;
        }
        let w = w.max(T::zero()).min(T::one());
        let e = pairs
            .entry((i.min(j), i.max(j)))
            .or_insert((T::zero(), T::zero()));
        // repeated directed edges keep the strongest membership
        if i < j {
            e.0 = e.0.max(w);
        } else {
            e.1 = e.1.max(w);
        }
    }
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for ((i, j), (a, b)) in pairs {
        let w = (a + b - a * b).max(T::zero()).min(T::one());
        if w > T::zero() {
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut weights = Vec::new();
    row_ptr.push(0);
    for mut r in rows {
        r.sort_by_key(|&(j, _)| j);
        for (j, w) in r {
            cols.push(j);
            weights.push(w);
        }
        row_ptr.push(cols.len());
    }
    Ok(FuzzyGraph {
        row_ptr,
        cols,
        weights,
        rho: Vec::new(),
        sigma: Vec::new(),
    })
}

/// Membership weights `exp(−max(d − ρ, 0)/σ)` of each k-NN edge, symmetrized by
/// [`fuzzy_union`]. The calibration target is `log2(k)`.
pub fn fuzzy_simplicial_set<T: Scalar>(
    graph: &NeighborGraph<T>,
    local_connectivity: usize,
) -> Result<FuzzyGraph<T>> {
    let n = graph.n_points();
    let target = T::from_count(graph.k).log2();
    let mut directed = Vec::with_capacity(n * graph.k);
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for i in 0..n {
        let cal = smooth_knn(&graph.distances[i], local_connectivity, target)?;
        for (&j, &d) in graph.indices[i].iter().zip(&graph.distances[i]) {
            let gap = (d - cal.rho).max(T::zero());
            directed.push((i, j, (-gap / cal.sigma).exp()));
        }
        rho.push(cal.rho);
        sigma.push(cal.sigma);
    }
    let mut g = fuzzy_union(n, &directed)?;
    g.rho = rho;
    g.sigma = sigma;
    Ok(g)
}
