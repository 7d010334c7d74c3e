use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use tokio::sync::{Mutex, OnceCell};
use topicscope_core::bundle::{
    load_bundle, validate_bundle, write_topic_names, BundleError, TermMatcher, ValidationReport,
};
use topicscope_core::cache::{
    compute_map, compute_pca_map, default_cache_path, topic_wordcloud, CacheError, CacheParams,
    MapKind, Summary,
};
use topicscope_core::interpret::NormalizedPhi;
use topicscope_core::layout::WordcloudLayout;
use topicscope_core::{Bundle, InterpretationCache, Projection};

use crate::error::{ApiError, ApiResult};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("bundle is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Where the derived artifacts came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheSource {
    /// Read from a cache file matching the bundle.
    Loaded,
    /// Computed at startup and written to the cache file.
    Computed,
    /// Computed on first request.
    Lazy,
}

#[derive(Debug, Clone)]
pub struct ServerOptions {
    /// Build every artifact before serving instead of on first request.
    pub precompute: bool,
    /// Defaults to `<bundle>/.cache/interpretation.json`.
    pub cache_path: Option<PathBuf>,
    pub params: CacheParams<f64>,
    /// Dashboard assets served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            precompute: true,
            cache_path: None,
            params: CacheParams::default(),
            static_dir: None,
        }
    }
}

/// Shared, read-mostly server state. Topic names are the only mutable part.
pub struct AppState {
    pub(crate) bundle: Arc<Bundle>,
    pub(crate) hash: String,
    pub(crate) names: RwLock<Vec<String>>,
    pub(crate) rename_lock: Mutex<()>,
    pub(crate) params: CacheParams<f64>,
    pub(crate) summary: Summary<f64>,
    pub(crate) matcher: TermMatcher,
    pub(crate) phi_hat: NormalizedPhi<f64>,
    maps: [OnceCell<Option<Projection>>; 4],
    pca_maps: [OnceCell<Option<Projection>>; 4],
    wordclouds: Vec<OnceCell<Option<WordcloudLayout>>>,
    /// Hash of a cache file that does not match the bundle (lazy mode only).
    pub(crate) stale_cache: Option<String>,
    pub(crate) source: CacheSource,
    pub(crate) static_dir: Option<PathBuf>,
}

fn slot(kind: MapKind) -> usize {
    MapKind::ALL
        .iter()
        .position(|k| *k == kind)
        .expect("listed")
}

impl AppState {
    /// Loads and validates the bundle and prepares the cache.
    ///
    /// A cache file matching the bundle is always used. With `precompute`, a
    /// missing or stale cache is rebuilt and written before returning. Without it,
    /// artifacts are built on first request (requests wait for the build), and a
    /// stale cache file makes cache-backed endpoints answer 409.
    pub async fn open(
        bundle_dir: impl AsRef<Path>,
        options: ServerOptions,
    ) -> Result<Arc<Self>, ServerError> {
        let bundle_dir = bundle_dir.as_ref().to_path_buf();
        let bundle: Bundle = tokio::task::spawn_blocking({
            let dir = bundle_dir.clone();
            move || load_bundle(dir)
        })
        .await
        .expect("loader does not panic")?;
        let report = validate_bundle(&bundle);
        if !report.is_ok() {
            return Err(ServerError::Invalid(report));
        }
        let cache_path = options
            .cache_path
            .clone()
            .unwrap_or_else(|| default_cache_path(&bundle_dir));
        let bundle = Arc::new(bundle);
        let hash = bundle.content_hash();

        let existing = if cache_path.exists() {
            match InterpretationCache::load(&cache_path) {
                Ok(c) => Some(c),
                Err(e) => {
                    tracing::warn!("ignoring unreadable cache: {e}");
                    None
                }
            }
        } else {
            None
        };
        let (cache, source, stale) = match existing {
            Some(c) if c.bundle_hash == hash => (Some(c), CacheSource::Loaded, None),
            other => {
                let stale = other.map(|c| c.bundle_hash);
                if options.precompute {
                    let (b, p) = (bundle.clone(), options.params.clone());
                    let built =
                        tokio::task::spawn_blocking(move || InterpretationCache::build(&b, &p))
                            .await
                            .expect("cache build does not panic")?;
                    if let Err(e) = built.save(&cache_path) {
                        tracing::warn!("could not write cache: {e}");
                    }
                    (Some(built), CacheSource::Computed, None)
                } else {
                    (None, CacheSource::Lazy, stale)
                }
            }
        };

        let summary = match &cache {
            Some(c) => c.summary.clone(),
            None => Summary::compute(&bundle, &options.params)?,
        };
        let state = Self {
            names: RwLock::new(bundle.topic_names.clone()),
            hash,
            rename_lock: Mutex::new(()),
            params: cache
                .as_ref()
                .map_or_else(|| options.params.clone(), |c| c.params.clone()),
            summary,
            matcher: TermMatcher::new(&bundle.vocabulary),
            phi_hat: NormalizedPhi::new(&bundle.phi),
            maps: Default::default(),
            pca_maps: Default::default(),
            wordclouds: (0..bundle.n_topics()).map(|_| OnceCell::new()).collect(),
            stale_cache: stale,
            source,
            static_dir: options.static_dir,
            bundle,
        };
        if let Some(c) = cache {
            for kind in MapKind::ALL {
                let _ = state.maps[slot(kind)].set(c.maps.get(kind).cloned());
            }
            for (cell, wc) in state.wordclouds.iter().zip(c.wordclouds) {
                let _ = cell.set(wc);
            }
        }
        Ok(Arc::new(state))
    }

    pub fn bundle(&self) -> &Bundle {
        &self.bundle
    }

    pub fn bundle_hash(&self) -> &str {
        &self.hash
    }

    pub fn cache_source(&self) -> CacheSource {
        self.source
    }

    pub fn topic_names(&self) -> Vec<String> {
        self.names.read().expect("names lock").clone()
    }

    fn check_fresh(&self) -> ApiResult<()> {
        match &self.stale_cache {
            Some(found) => Err(ApiError::new(
                axum::http::StatusCode::CONFLICT,
                "stale_cache",
                format!(
                    "cache file was built for bundle {found} but the bundle is {}; recompute the cache",
                    self.hash
                ),
            )),
            None => Ok(()),
        }
    }

    pub(crate) async fn map(&self, kind: MapKind, pca: bool) -> ApiResult<Option<Projection>> {
        self.check_fresh()?;
        let cell = if pca {
            &self.pca_maps[slot(kind)]
        } else {
            &self.maps[slot(kind)]
        };
        let value = cell
            .get_or_try_init(|| async {
                let (b, params) = (self.bundle.clone(), self.params.clone());
                let summary = self.summary.clone();
                tokio::task::spawn_blocking(move || {
                    if pca {
                        Ok(compute_pca_map(&b, &summary, kind))
                    } else {
                        compute_map(&b, &summary, kind, &params)
                    }
                })
                .await
                .map_err(|e| ApiError::internal(e.to_string()))?
                .map_err(|e| ApiError::internal(e.to_string()))
            })
            .await?;
        Ok(value.clone())
    }

    pub(crate) async fn wordcloud(&self, topic: usize) -> ApiResult<Option<WordcloudLayout>> {
        self.check_fresh()?;
        let value = self.wordclouds[topic]
            .get_or_try_init(|| async {
                let (b, params) = (self.bundle.clone(), self.params.clone());
                tokio::task::spawn_blocking(move || topic_wordcloud(&b, topic, &params))
                    .await
                    .map_err(|e| ApiError::internal(e.to_string()))?
                    .map_err(|e| ApiError::internal(e.to_string()))
            })
            .await?;
        Ok(value.clone())
    }

    /// Validates, persists and publishes a new name. Renames are serialized; the file
    /// is replaced atomically, so concurrent renames never lose each other's topics.
    pub(crate) async fn rename(&self, topic: usize, name: String) -> ApiResult<()> {
        let _guard = self.rename_lock.lock().await;
        let mut names = self.topic_names();
        names[topic] = name;
        let location = self
            .bundle
            .location
            .clone()
            .ok_or_else(|| ApiError::internal("bundle has no location on disk"))?;
        let (to_write, n) = (names.clone(), self.bundle.n_topics());
        tokio::task::spawn_blocking(move || write_topic_names(&location, &to_write, n))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(|e| ApiError::internal(e.to_string()))?;
        *self.names.write().expect("names lock") = names;
        Ok(())
    }
}
