use serde::{Deserialize, Serialize};

use super::fuzzy::FuzzyGraph;
use super::rng::LayoutRng;
use crate::Scalar;

pub const SPECTRAL_TOL: f64 = 1e-6;
pub const SPECTRAL_MAX_ITER: usize = 1000;
/// Initial coordinates are scaled into `[−INIT_EXTENT, INIT_EXTENT]`.
pub const INIT_EXTENT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Spectral,
    Random,
}

/// Starting coordinates for layout optimization. Spectral initialization falls back
/// to random when the eigenvector iteration does not converge.
pub fn initialize_layout<T: Scalar>(
    graph: &FuzzyGraph<T>,
    mode: InitMode,
    seed: u64,
) -> Vec<[T; 2]> {
    let n = graph.n_points();
    let mut rng = LayoutRng::for_initialization(seed, n);
    if mode == InitMode::Spectral {
        if let Some(coords) = spectral(graph, &mut rng) {
            return coords;
        }
    }
    random_layout(n, &mut rng)
}

fn random_layout<T: Scalar>(n: usize, rng: &mut LayoutRng) -> Vec<[T; 2]> {
    (0..n)
        .map(|_| {
            [
                rng.uniform(-INIT_EXTENT, INIT_EXTENT),
                rng.uniform(-INIT_EXTENT, INIT_EXTENT),
            ]
        })
        .collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let c = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, b)| *x -= c * b);
    }
}

/// Two leading nontrivial eigenvectors of `½(I + D^{-1/2} W D^{-1/2})`, which are
/// the smallest nontrivial ones of the normalized Laplacian.
fn spectral<T: Scalar>(graph: &FuzzyGraph<T>, rng: &mut LayoutRng) -> Option<Vec<[T; 2]>> {
    let n = graph.n_points();
    if n < 3 {
        return None;
    }
    let degree: Vec<f64> = (0..n).map(|i| graph.degree(i).as_f64()).collect();
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mv: f64 = graph
                    .row(i)
                    .map(|(j, w)| w.as_f64() * inv_sqrt[j] * v[j])
                    .sum();
                0.5 * (v[i] + inv_sqrt[i] * mv)
            })
            .collect()
    };
    let mut trivial: Vec<f64> = degree.iter().map(|d| d.sqrt()).collect();
    if normalize(&mut trivial) == 0.0 {
        return None;
    }
    let mut basis = vec![trivial];
    for _ in 0..2 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.unit() - 0.5).collect();
        orthogonalize(&mut v, &basis);
        if normalize(&mut v) == 0.0 {
            return None;
        }
        let mut converged = false;
        for _ in 0..SPECTRAL_MAX_ITER {
            let mut w = apply(&v);
            orthogonalize(&mut w, &basis);
            let lambda = dot(&w, &v);
            let residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= SPECTRAL_TOL {
                converged = true;
                break;
            }
            if normalize(&mut w) < f64::EPSILON {
                // v already spans a null direction of the operator
                converged = true;
                break;
            }
            v = w;
        }
        if !converged {
            return None;
        }
        basis.push(v);
    }
    let max = basis[1]
        .iter()
        .chain(&basis[2])
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if !(max > 0.0) || !max.is_finite() {
        return None;
    }
    let scale = INIT_EXTENT / max;
    Some(
        (0..n)
            .map(|i| [T::lit(basis[1][i] * scale), T::lit(basis[2][i] * scale)])
            .collect(),
    )
}
