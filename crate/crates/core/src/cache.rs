//! Everything derived from a bundle, computed once and stored as JSON next to it.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{persist_atomic, CorpusBundle};
use crate::interpret::{
    dominant_topic, group_topic_matrix, term_prevalence, top_k_terms, topic_dominance_counts,
    topic_importance, GroupTopicMatrix, InterpretError,
};
use crate::layout::{layout_wordcloud, LayoutError, WordcloudLayout};
use crate::manifold::{
    pca_projection, umap_project, ManifoldError, Metric, Projection2D, UmapParams,
};
use crate::Scalar;

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_DIR: &str = ".cache";
pub const CACHE_FILE: &str = "interpretation.json";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: invalid cache file: {message}")]
    Format { path: PathBuf, message: String },
    #[error("cache was built for bundle {found}, current bundle is {expected}")]
    Stale { expected: String, found: String },
    #[error(transparent)]
    Interpret(#[from] InterpretError),
    #[error("projection failed: {0}")]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

pub type Result<T> = std::result::Result<T, CacheError>;

/// `<bundle>/.cache/interpretation.json`
pub fn default_cache_path(bundle_dir: impl AsRef<Path>) -> PathBuf {
    bundle_dir.as_ref().join(CACHE_DIR).join(CACHE_FILE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheParams<T> {
    pub umap: UmapParams<T>,
    /// Terms kept per topic ranking.
    pub top_terms: usize,
    /// Terms offered to each topic wordcloud.
    pub wordcloud_terms: usize,
    pub wordcloud_width: f64,
    pub wordcloud_height: f64,
}

impl<T: Scalar> Default for CacheParams<T> {
    fn default() -> Self {
        Self {
            umap: UmapParams {
                metric: Metric::Cosine,
                ..UmapParams::default()
            },
            top_terms: 30,
            wordcloud_terms: 100,
            wordcloud_width: 800.0,
            wordcloud_height: 600.0,
        }
    }
}

impl<T: Scalar> CacheParams<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.umap.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Topics,
    Words,
    Documents,
    Groups,
}

impl MapKind {
    pub const ALL: [MapKind; 4] = [
        MapKind::Topics,
        MapKind::Words,
        MapKind::Documents,
        MapKind::Groups,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::Topics => "topics",
            MapKind::Words => "words",
            MapKind::Documents => "documents",
            MapKind::Groups => "groups",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// The inexpensive per-bundle aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    /// In-vocabulary token count per document.
    pub doc_lengths: Vec<u64>,
    pub importances: Vec<T>,
    pub term_prevalence: Vec<T>,
    /// `(term index, weight)` per topic, best first.
    pub top_terms: Vec<Vec<(usize, T)>>,
    pub dominant_topics: Vec<usize>,
    pub dominance_counts: Vec<usize>,
    pub group_matrix: Option<GroupTopicMatrix<T>>,
}

impl<T: Scalar> Summary<T> {
    pub fn compute(bundle: &CorpusBundle<T>, params: &CacheParams<T>) -> Result<Self> {
        let doc_lengths = bundle.doc_term_or_derived().doc_lengths();
        let importances = topic_importance(bundle.theta.view(), &doc_lengths)?;
        let top_terms = (0..bundle.n_topics())
            .map(|t| top_k_terms(&bundle.phi, t, params.top_terms.max(1)))
            .collect::<std::result::Result<_, _>>()?;
        let dominant_topics = if bundle.n_topics() == 0 {
            vec![0; bundle.n_docs()]
        } else {
            bundle
                .theta
                .rows()
                .into_iter()
                .map(dominant_topic)
                .collect()
        };
        let group_matrix = match bundle.group_labels() {
            Some(labels) => Some(group_topic_matrix(bundle.theta.view(), &labels)?),
            None => None,
        };
        Ok(Self {
            doc_lengths,
            importances,
            term_prevalence: term_prevalence(&bundle.phi),
            top_terms,
            dominant_topics,
            dominance_counts: topic_dominance_counts(bundle.theta.view()),
            group_matrix,
        })
    }
}

/// Rows embedded for a map: φ rows for topics, φ columns for words, document
/// embeddings (or Θ rows) for documents, group-topic rows for groups.
pub fn map_input<T: Scalar>(
    bundle: &CorpusBundle<T>,
    summary: &Summary<T>,
    kind: MapKind,
) -> Option<Array2<T>> {
    match kind {
        MapKind::Topics => Some(bundle.phi.clone()),
        MapKind::Words => Some(bundle.phi.t().to_owned()),
        MapKind::Documents => Some(
            bundle
                .doc_embeddings
                .clone()
                .unwrap_or_else(|| bundle.theta.clone()),
        ),
        MapKind::Groups => summary
            .group_matrix
            .as_ref()
            .map(GroupTopicMatrix::to_array),
    }
}

/// UMAP projection for one map; `None` for the group map of a bundle without groups.
pub fn compute_map<T: Scalar>(
    bundle: &CorpusBundle<T>,
    summary: &Summary<T>,
    kind: MapKind,
    params: &CacheParams<T>,
) -> Result<Option<Projection2D<T>>> {
    match map_input(bundle, summary, kind) {
        Some(points) => Ok(Some(umap_project(points.view(), &params.umap)?)),
        None => Ok(None),
    }
}

/// PCA projection for one map.
pub fn compute_pca_map<T: Scalar>(
    bundle: &CorpusBundle<T>,
    summary: &Summary<T>,
    kind: MapKind,
) -> Option<Projection2D<T>> {
    map_input(bundle, summary, kind).map(|points| pca_projection(points.view()))
}

/// Wordcloud of a topic's highest positive φ weights; `None` when the topic has no
/// positive weight.
pub fn topic_wordcloud<T: Scalar>(
    bundle: &CorpusBundle<T>,
    topic: usize,
    params: &CacheParams<T>,
) -> Result<Option<WordcloudLayout>> {
    let mut seen = std::collections::HashSet::new();
    let weights: Vec<(String, f64)> =
        top_k_terms(&bundle.phi, topic, params.wordcloud_terms.max(1))?
            .into_iter()
            .filter(|(_, w)| *w > T::zero())
            .map(|(m, w)| (bundle.vocabulary[m].clone(), w.as_f64()))
            // a repeated vocabulary entry keeps its heavier occurrence
            .filter(|(term, _)| seen.insert(term.clone()))
            .collect();
    if weights.is_empty() {
        return Ok(None);
    }
    Ok(Some(layout_wordcloud(
        &weights,
        params.wordcloud_width,
        params.wordcloud_height,
        params.umap.seed.wrapping_add(topic as u64),
    )?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maps<T> {
    pub topics: Projection2D<T>,
    pub words: Projection2D<T>,
    pub documents: Projection2D<T>,
    pub groups: Option<Projection2D<T>>,
}

impl<T: Scalar> Maps<T> {
    pub fn get(&self, kind: MapKind) -> Option<&Projection2D<T>> {
        match kind {
            MapKind::Topics => Some(&self.topics),
            MapKind::Words => Some(&self.words),
            MapKind::Documents => Some(&self.documents),
            MapKind::Groups => self.groups.as_ref(),
        }
    }
}

/// All derived artifacts of a bundle, tied to its content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationCache<T> {
    pub version: u32,
    pub bundle_hash: String,
    pub params: CacheParams<T>,
    pub summary: Summary<T>,
    pub maps: Maps<T>,
    /// One per topic.
    pub wordclouds: Vec<Option<WordcloudLayout>>,
}

impl<T: Scalar> InterpretationCache<T> {
    pub fn build(bundle: &CorpusBundle<T>, params: &CacheParams<T>) -> Result<Self> {
        let summary = Summary::compute(bundle, params)?;
        let map = |kind| compute_map(bundle, &summary, kind, params);
        let maps = Maps {
            topics: map(MapKind::Topics)?.expect("always present"),
            words: map(MapKind::Words)?.expect("always present"),
            documents: map(MapKind::Documents)?.expect("always present"),
            groups: map(MapKind::Groups)?,
        };
        let wordclouds = (0..bundle.n_topics())
            .map(|t| topic_wordcloud(bundle, t, params))
            .collect::<Result<_>>()?;
        Ok(Self {
            version: CACHE_VERSION,
            bundle_hash: bundle.content_hash(),
            params: params.clone(),
            summary,
            maps,
            wordclouds,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("cache serializes");
        s.push('\n');
        s
    }

    /// Atomically writes the cache, creating parent directories.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        persist_atomic(path, self.to_json().as_bytes()).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cache: Self = serde_json::from_str(&text).map_err(|e| CacheError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if cache.version != CACHE_VERSION {
            return Err(CacheError::Format {
                path: path.to_path_buf(),
                message: format!("unsupported version {}", cache.version),
            });
        }
        Ok(cache)
    }

    /// Loads the cache and checks that it belongs to `bundle`.
    pub fn load_for(path: impl AsRef<Path>, bundle: &CorpusBundle<T>) -> Result<Self> {
        let cache = Self::load(path)?;
        cache.check(bundle)?;
        Ok(cache)
    }

    pub fn check(&self, bundle: &CorpusBundle<T>) -> Result<()> {
        let expected = bundle.content_hash();
        if self.bundle_hash != expected {
            return Err(CacheError::Stale {
                expected,
                found: self.bundle_hash.clone(),
            });
        }
        Ok(())
    }
}
