//! The on-disk interchange bundle: corpus, vocabulary, topic-term and
//! document-topic matrices, plus optional groups, embeddings and counts.

mod io;
pub mod tokenize;
mod validate;

use std::path::PathBuf;

use ndarray::Array2;
use thiserror::Error;

pub(crate) use io::persist_atomic;
pub use io::{
    load_bundle, save_bundle, save_topic_names, write_topic_names, Manifest, MANIFEST_FILE,
};
pub use tokenize::{derive_doc_term, TermMatcher};
pub use validate::{validate_bundle, Issue, ValidationReport};

use crate::Scalar;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{file}: {source}")]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Parse { file: PathBuf, message: String },
    #[error("{file}: malformed number {value:?} at row {row}, column {column}")]
    Number {
        file: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },
    #[error("{0}")]
    Dimension(String),
    #[error("invalid topic names: {0}")]
    TopicNames(String),
    #[error("bundle has no on-disk location")]
    NotPersisted,
}

pub type Result<T> = std::result::Result<T, BundleError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub group: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            group: None,
        }
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }
}

/// Sparse D×M matrix of nonnegative term counts, rows sorted by term index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    n_terms: usize,
    rows: Vec<Vec<(usize, u64)>>,
}

impl DocTermMatrix {
    pub fn zeros(n_docs: usize, n_terms: usize) -> Self {
        Self {
            n_terms,
            rows: vec![Vec::new(); n_docs],
        }
    }

    /// Builds from rows already sorted by term with no duplicate terms.
    pub(crate) fn from_sorted_rows(n_terms: usize, rows: Vec<Vec<(usize, u64)>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.windows(2).all(|w| w[0].0 < w[1].0)));
        Self { n_terms, rows }
    }

    /// Builds from `(doc, term, count)` triplets; duplicate cells are summed and
    /// zero counts dropped. Indices must be in range.
    pub fn from_triplets(
        n_docs: usize,
        n_terms: usize,
        triplets: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Self {
        let mut rows = vec![Vec::new(); n_docs];
        for (d, m, c) in triplets {
            assert!(d < n_docs && m < n_terms, "triplet ({d},{m}) out of range");
            if c > 0 {
                rows[d].push((m, c));
            }
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|&(m, _)| m);
            row.dedup_by(|later, earlier| {
                if later.0 == earlier.0 {
                    earlier.1 += later.1;
                    true
                } else {
                    false
                }
            });
        }
        Self { n_terms, rows }
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn row(&self, doc: usize) -> &[(usize, u64)] {
        &self.rows[doc]
    }

    pub fn get(&self, doc: usize, term: usize) -> u64 {
        let row = &self.rows[doc];
        row.binary_search_by_key(&term, |&(m, _)| m)
            .map(|i| row[i].1)
            .unwrap_or(0)
    }

    pub fn row_sum(&self, doc: usize) -> u64 {
        self.rows[doc].iter().map(|&(_, c)| c).sum()
    }

    /// In-vocabulary token count of every document.
    pub fn doc_lengths(&self) -> Vec<u64> {
        (0..self.n_docs()).map(|d| self.row_sum(d)).collect()
    }

    /// Nonzero cells in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(d, row)| row.iter().map(move |&(m, c)| (d, m, c)))
    }
}

/// Where a loaded bundle lives on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleLocation {
    pub dir: PathBuf,
    pub manifest: Manifest,
    /// Hex SHA-256 over the manifest and data files (topic names excluded).
    pub content_hash: String,
}

impl BundleLocation {
    pub fn topic_names_path(&self) -> PathBuf {
        self.dir.join(self.manifest.topic_names_file())
    }
}

/// A fully materialized interpretation bundle.
///
/// `phi` is N×M (topics × terms), `theta` is D×N (documents × topics). Neither
/// matrix is renormalized; negative entries are kept as given.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusBundle<T: Scalar = f64> {
    pub documents: Vec<Document>,
    pub vocabulary: Vec<String>,
    pub phi: Array2<T>,
    pub theta: Array2<T>,
    pub topic_names: Vec<String>,
    pub doc_embeddings: Option<Array2<T>>,
    pub doc_term: Option<DocTermMatrix>,
    pub location: Option<BundleLocation>,
}

impl<T: Scalar> CorpusBundle<T> {
    /// In-memory bundle with default topic names and no optional parts.
    pub fn new(
        documents: Vec<Document>,
        vocabulary: Vec<String>,
        phi: Array2<T>,
        theta: Array2<T>,
    ) -> Self {
        let topic_names = default_topic_names(phi.nrows());
        Self {
            documents,
            vocabulary,
            phi,
            theta,
            topic_names,
            doc_embeddings: None,
            doc_term: None,
            location: None,
        }
    }

    pub fn n_topics(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn n_docs(&self) -> usize {
        self.documents.len()
    }

    /// Per-document group labels, present only when every document has one.
    pub fn group_labels(&self) -> Option<Vec<&str>> {
        self.documents
            .iter()
            .map(|d| d.group.as_deref())
            .collect::<Option<Vec<_>>>()
            .filter(|labels| !labels.is_empty())
    }

    pub fn has_groups(&self) -> bool {
        self.group_labels().is_some()
    }

    /// Content hash of the files this bundle was loaded from, or of its standard
    /// serialization when it only exists in memory.
    pub fn content_hash(&self) -> String {
        match &self.location {
            Some(loc) => loc.content_hash.clone(),
            None => io::canonical_hash(self),
        }
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.documents.iter().position(|d| d.id == id)
    }

    /// Supplied counts, or counts derived with the built-in tokenizer.
    pub fn doc_term_or_derived(&self) -> std::borrow::Cow<'_, DocTermMatrix> {
        match &self.doc_term {
            Some(dt) => std::borrow::Cow::Borrowed(dt),
            None => std::borrow::Cow::Owned(derive_doc_term(self)),
        }
    }
}

pub fn default_topic_names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("Topic {k}")).collect()
}
