//! 2-D projections: a from-scratch UMAP and a PCA fallback.

mod curve;
mod fuzzy;
mod init;
mod knn;
mod optimize;
mod pca;
pub(crate) mod rng;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub use curve::{curve_loss, curve_targets, fit_ab};
pub use fuzzy::{fuzzy_simplicial_set, fuzzy_union, smooth_knn, FuzzyGraph, SmoothKnn};
pub use init::{initialize_layout, InitMode};
pub use knn::{knn_graph, Metric, NeighborGraph};
pub use optimize::{optimize_layout, LayoutParams};
pub use pca::pca_project;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("need at least {min} points, got {actual}")]
    InsufficientPoints { min: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected {expected} rows, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("curve fit did not converge after {iterations} iterations (last a={a}, b={b})")]
    CurveFit { a: f64, b: f64, iterations: usize },
    #[error("non-finite coordinate for point {point} in epoch {epoch}")]
    NonFinite { epoch: usize, point: usize },
}

pub type Result<T> = std::result::Result<T, ManifoldError>;

/// Above this many points the default epoch count drops from 500 to 200.
pub const LARGE_DATASET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmapParams<T> {
    pub n_neighbors: usize,
    pub min_dist: T,
    pub spread: T,
    /// `None` picks 500, or 200 for more than 10 000 points.
    pub epochs: Option<usize>,
    pub learning_rate: T,
    pub negative_samples: usize,
    pub repulsion_strength: T,
    pub local_connectivity: usize,
    pub metric: Metric,
    pub init: InitMode,
    pub seed: u64,
}

impl<T: Scalar> Default for UmapParams<T> {
    fn default() -> Self {
        Self {
            n_neighbors: 15,
            min_dist: T::lit(0.1),
            spread: T::one(),
            epochs: None,
            learning_rate: T::one(),
            negative_samples: 5,
            repulsion_strength: T::one(),
            local_connectivity: 1,
            metric: Metric::Euclidean,
            init: InitMode::Spectral,
            seed: 42,
        }
    }
}

impl<T: Scalar> UmapParams<T> {
    pub fn epochs_for(&self, n_points: usize) -> usize {
        self.epochs
            .unwrap_or(if n_points > LARGE_DATASET { 200 } else { 500 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Umap,
    Pca,
}

/// 2-D coordinates, one per input row, with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct Projection2D<T> {
    pub method: ProjectionMethod,
    pub coords: Vec<[T; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<UmapParams<T>>,
    /// Fitted curve parameters `(a, b)` for UMAP projections.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ab: Option<(T, T)>,
}

impl<T: Scalar> Projection2D<T> {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Full UMAP pipeline: k-NN graph, fuzzy simplicial set, curve fit, initialization
/// and layout optimization. Zero points give an empty projection and a single point
/// sits at the origin.
pub fn umap_project<T: Scalar>(
    points: ArrayView2<'_, T>,
    params: &UmapParams<T>,
) -> Result<Projection2D<T>> {
    let p = points.nrows();
    if params.n_neighbors < 2 {
        return Err(ManifoldError::InvalidParameter(
            "n_neighbors must be at least 2".into(),
        ));
    }
    if let Some(v) = points.iter().find(|v| !v.is_finite()) {
        return Err(ManifoldError::InvalidParameter(format!(
            "input contains non-finite value {v}"
        )));
    }
    let (a, b) = fit_ab(params.min_dist, params.spread)?;
    let done = |coords| Projection2D {
        method: ProjectionMethod::Umap,
        coords,
        params: Some(params.clone()),
        ab: Some((a, b)),
    };
    if p < 2 {
        return Ok(done(vec![[T::zero(); 2]; p]));
    }
    let knn = knn_graph(points, params.n_neighbors, params.metric)?;
    let graph = fuzzy_simplicial_set(&knn, params.local_connectivity)?;
    let init = initialize_layout(&graph, params.init, params.seed);
    let layout = LayoutParams {
        a,
        b,
        epochs: params.epochs_for(p),
        learning_rate: params.learning_rate,
        negative_samples: params.negative_samples,
        gamma: params.repulsion_strength,
        seed: params.seed,
    };
    Ok(done(optimize_layout(&graph, init, &layout)?))
}

/// PCA projection wrapped with its method tag.
pub fn pca_projection<T: Scalar>(points: ArrayView2<'_, T>) -> Projection2D<T> {
    Projection2D {
        method: ProjectionMethod::Pca,
        coords: pca_project(points),
        params: None,
        ab: None,
    }
}
