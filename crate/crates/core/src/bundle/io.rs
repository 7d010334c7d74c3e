use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    default_topic_names, BundleError, BundleLocation, CorpusBundle, DocTermMatrix, Document, Result,
};
use crate::Scalar;

pub const MANIFEST_FILE: &str = "manifest.json";
const TOPIC_NAMES_FILE: &str = "topic_names.json";

/// `manifest.json`: maps each bundle part to a file relative to the bundle directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub vocabulary: String,
    pub topic_term: String,
    pub doc_topic: String,
    pub documents: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_term: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_embeddings: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_names: Option<String>,
}

impl Manifest {
    pub fn standard(has_doc_term: bool, has_embeddings: bool) -> Self {
        Self {
            version: 1,
            vocabulary: "vocab.txt".into(),
            topic_term: "phi.csv".into(),
            doc_topic: "theta.csv".into(),
            documents: "documents.jsonl".into(),
            doc_term: has_doc_term.then(|| "doc_term.csv".into()),
            doc_embeddings: has_embeddings.then(|| "doc_embeddings.csv".into()),
            topic_names: Some(TOPIC_NAMES_FILE.into()),
        }
    }

    /// The names file; `topic_names.json` when the manifest does not name one.
    pub fn topic_names_file(&self) -> &str {
        self.topic_names.as_deref().unwrap_or(TOPIC_NAMES_FILE)
    }
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord<'a> {
    id: std::borrow::Cow<'a, str>,
    text: std::borrow::Cow<'a, str>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<std::borrow::Cow<'a, str>>,
}

/// Incremental content hash over the files that determine derived artifacts.
/// Topic names are excluded: renaming never invalidates a cache.
struct ContentHasher(Sha256);

impl ContentHasher {
    fn new() -> Self {
        Self(Sha256::new())
    }

    fn part(&mut self, role: &str, bytes: &[u8]) {
        self.0.update(role.as_bytes());
        self.0.update([0u8]);
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

fn read(dir: &Path, name: &str) -> Result<(PathBuf, Vec<u8>)> {
    let file = dir.join(name);
    fs::read(&file)
        .map(|bytes| (file.clone(), bytes))
        .map_err(|source| BundleError::Io { file, source })
}

fn utf8(file: &Path, bytes: Vec<u8>) -> Result<String> {
    String::from_utf8(bytes).map_err(|e| BundleError::Parse {
        file: file.to_path_buf(),
        message: format!("invalid UTF-8: {e}"),
    })
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    (!text.is_empty())
        .then(|| body.split('\n'))
        .into_iter()
        .flatten()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
}

fn parse_dense<T: Scalar>(file: &Path, text: &str) -> Result<Array2<T>> {
    let mut values = Vec::new();
    let mut n_cols = None;
    let mut n_rows = 0;
    for (r, line) in lines(text).enumerate() {
        let mut cols = 0;
        for (c, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| BundleError::Number {
                    file: file.to_path_buf(),
                    row: r + 1,
                    column: c + 1,
                    value: cell.to_string(),
                })?;
            let v =
                T::from_f64(v)
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| BundleError::Number {
                        file: file.to_path_buf(),
                        row: r + 1,
                        column: c + 1,
                        value: cell.to_string(),
                    })?;
            values.push(v);
            cols += 1;
        }
        match n_cols {
            None => n_cols = Some(cols),
            Some(expected) if expected != cols => {
                return Err(BundleError::Dimension(format!(
                    "{}: row {} has {cols} columns, expected {expected}",
                    file.display(),
                    r + 1
                )))
            }
            _ => {}
        }
        n_rows += 1;
    }
    let shape = (n_rows, n_cols.unwrap_or(0));
    Ok(Array2::from_shape_vec(shape, values).expect("row lengths checked"))
}

fn parse_triplets(file: &Path, text: &str, n_docs: usize, n_terms: usize) -> Result<DocTermMatrix> {
    let mut triplets = Vec::new();
    for (r, line) in lines(text).enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(BundleError::Parse {
                file: file.to_path_buf(),
                message: format!("row {} has {} fields, expected 3", r + 1, cells.len()),
            });
        }
        let mut parsed = [0u64; 3];
        for (c, cell) in cells.iter().enumerate() {
            parsed[c] = cell.parse().map_err(|_| BundleError::Number {
                file: file.to_path_buf(),
                row: r + 1,
                column: c + 1,
                value: cell.to_string(),
            })?;
        }
        let [d, m, count] = parsed;
        let (d, m) = (d as usize, m as usize);
        if d >= n_docs || m >= n_terms {
            return Err(BundleError::Dimension(format!(
                "{}: row {}: cell ({d},{m}) outside {n_docs}x{n_terms}",
                file.display(),
                r + 1
            )));
        }
        triplets.push((d, m, count));
    }
    Ok(DocTermMatrix::from_triplets(n_docs, n_terms, triplets))
}

fn parse_documents(file: &Path, text: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(line).map_err(|e| BundleError::Parse {
            file: file.to_path_buf(),
            message: format!("line {}: {e}", r + 1),
        })?;
        docs.push(Document {
            id: rec.id.into_owned(),
            text: rec.text.into_owned(),
            group: rec.group.map(|g| g.into_owned()),
        });
    }
    Ok(docs)
}

fn dim_mismatch(what: &str, got: usize, against: &str, expected: usize) -> BundleError {
    BundleError::Dimension(format!("{what} ({got}) != {against} ({expected})"))
}

/// Reads a bundle directory and checks every cross-file dimension.
pub fn load_bundle<T: Scalar>(dir: impl AsRef<Path>) -> Result<CorpusBundle<T>> {
    let dir = dir.as_ref();
    let mut hasher = ContentHasher::new();

    let (file, bytes) = read(dir, MANIFEST_FILE)?;
    hasher.part("manifest", &bytes);
    let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| BundleError::Parse {
        file: file.clone(),
        message: e.to_string(),
    })?;
    if manifest.version != 1 {
        return Err(BundleError::Parse {
            file,
            message: format!("unsupported version {}", manifest.version),
        });
    }

    let (file, bytes) = read(dir, &manifest.vocabulary)?;
    hasher.part("vocabulary", &bytes);
    let text = utf8(&file, bytes)?;
    let vocabulary: Vec<String> = lines(&text).map(str::to_owned).collect();

    let (file, bytes) = read(dir, &manifest.topic_term)?;
    hasher.part("topic_term", &bytes);
    let phi: Array2<T> = parse_dense(&file, &utf8(&file, bytes)?)?;

    let (file, bytes) = read(dir, &manifest.doc_topic)?;
    hasher.part("doc_topic", &bytes);
    let theta: Array2<T> = parse_dense(&file, &utf8(&file, bytes)?)?;

    let (docs_file, bytes) = read(dir, &manifest.documents)?;
    hasher.part("documents", &bytes);
    let documents = parse_documents(&docs_file, &utf8(&docs_file, bytes)?)?;

    let (n, m, d) = (phi.nrows(), vocabulary.len(), documents.len());
    if phi.ncols() != m {
        return Err(dim_mismatch(
            "phi columns",
            phi.ncols(),
            "vocabulary size",
            m,
        ));
    }
    if theta.nrows() != d {
        return Err(dim_mismatch("theta rows", theta.nrows(), "documents", d));
    }
    if theta.ncols() != n {
        return Err(dim_mismatch("theta columns", theta.ncols(), "phi rows", n));
    }
    let labelled = documents.iter().filter(|doc| doc.group.is_some()).count();
    if labelled != 0 && labelled != d {
        return Err(BundleError::Dimension(format!(
            "{}: group labels ({labelled}) != documents ({d})",
            docs_file.display()
        )));
    }

    let doc_term = match &manifest.doc_term {
        Some(name) => {
            let (file, bytes) = read(dir, name)?;
            hasher.part("doc_term", &bytes);
            Some(parse_triplets(&file, &utf8(&file, bytes)?, d, m)?)
        }
        None => None,
    };

    let doc_embeddings = match &manifest.doc_embeddings {
        Some(name) => {
            let (file, bytes) = read(dir, name)?;
            hasher.part("doc_embeddings", &bytes);
            let emb: Array2<T> = parse_dense(&file, &utf8(&file, bytes)?)?;
            if emb.nrows() != d {
                return Err(dim_mismatch(
                    "doc_embeddings rows",
                    emb.nrows(),
                    "documents",
                    d,
                ));
            }
            Some(emb)
        }
        None => None,
    };

    let names_path = dir.join(manifest.topic_names_file());
    let topic_names = if names_path.exists() {
        let (file, bytes) = read(dir, manifest.topic_names_file())?;
        let names: Vec<String> =
            serde_json::from_slice(&bytes).map_err(|e| BundleError::Parse {
                file,
                message: e.to_string(),
            })?;
        if names.len() != n {
            return Err(dim_mismatch("topic names", names.len(), "topics", n));
        }
        names
    } else {
        default_topic_names(n)
    };

    Ok(CorpusBundle {
        documents,
        vocabulary,
        phi,
        theta,
        topic_names,
        doc_embeddings,
        doc_term,
        location: Some(BundleLocation {
            dir: dir.to_path_buf(),
            manifest,
            content_hash: hasher.finish(),
        }),
    })
}

fn format_dense<T: Scalar>(m: &Array2<T>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // shortest representation that parses back to the same value
            write!(out, "{}", v.as_f64()).unwrap();
        }
        out.push('\n');
    }
    out
}

/// The files of a bundle in the standard layout, in hashing order.
fn serialize_files<T: Scalar>(bundle: &CorpusBundle<T>) -> Vec<(&'static str, String, Vec<u8>)> {
    let manifest = Manifest::standard(bundle.doc_term.is_some(), bundle.doc_embeddings.is_some());
    let mut files = vec![(
        "manifest",
        MANIFEST_FILE.to_string(),
        serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )];

    let mut vocab = String::new();
    for term in &bundle.vocabulary {
        vocab.push_str(term);
        vocab.push('\n');
    }
    files.push((
        "vocabulary",
        manifest.vocabulary.clone(),
        vocab.into_bytes(),
    ));
    files.push((
        "topic_term",
        manifest.topic_term.clone(),
        format_dense(&bundle.phi).into_bytes(),
    ));
    files.push((
        "doc_topic",
        manifest.doc_topic.clone(),
        format_dense(&bundle.theta).into_bytes(),
    ));

    let mut docs = Vec::new();
    for doc in &bundle.documents {
        let rec = DocumentRecord {
            id: doc.id.as_str().into(),
            text: doc.text.as_str().into(),
            group: doc.group.as_deref().map(Into::into),
        };
        serde_json::to_writer(&mut docs, &rec).expect("document serializes");
        docs.push(b'\n');
    }
    files.push(("documents", manifest.documents.clone(), docs));

    if let (Some(dt), Some(name)) = (&bundle.doc_term, &manifest.doc_term) {
        let mut out = String::new();
        for (d, m, c) in dt.triplets() {
            writeln!(out, "{d},{m},{c}").unwrap();
        }
        files.push(("doc_term", name.clone(), out.into_bytes()));
    }
    if let (Some(emb), Some(name)) = (&bundle.doc_embeddings, &manifest.doc_embeddings) {
        files.push((
            "doc_embeddings",
            name.clone(),
            format_dense(emb).into_bytes(),
        ));
    }
    files
}

/// Hash of the standard serialization of an in-memory bundle.
pub(crate) fn canonical_hash<T: Scalar>(bundle: &CorpusBundle<T>) -> String {
    let mut hasher = ContentHasher::new();
    for (role, _, bytes) in serialize_files(bundle) {
        hasher.part(role, &bytes);
    }
    hasher.finish()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    persist_atomic(path, bytes).map_err(|source| BundleError::Io {
        file: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary file in the same directory and renames it into place,
/// so readers never see a partial file.
pub(crate) fn persist_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes `bundle` to `dir` in the standard layout and records the location.
pub fn save_bundle<T: Scalar>(bundle: &mut CorpusBundle<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| BundleError::Io {
        file: dir.to_path_buf(),
        source,
    })?;
    let mut hasher = ContentHasher::new();
    for (role, name, bytes) in serialize_files(bundle) {
        write_atomic(&dir.join(&name), &bytes)?;
        hasher.part(role, &bytes);
    }
    let manifest = Manifest::standard(bundle.doc_term.is_some(), bundle.doc_embeddings.is_some());
    let names = serde_json::to_vec_pretty(&bundle.topic_names).expect("names serialize");
    write_atomic(&dir.join(manifest.topic_names_file()), &names)?;
    bundle.location = Some(BundleLocation {
        dir: dir.to_path_buf(),
        manifest,
        content_hash: hasher.finish(),
    });
    Ok(())
}

pub(crate) fn check_topic_names(names: &[String], n_topics: usize) -> Result<()> {
    if names.len() != n_topics {
        return Err(BundleError::TopicNames(format!(
            "got {} names for {n_topics} topics",
            names.len()
        )));
    }
    if let Some(k) = names.iter().position(|s| s.trim().is_empty()) {
        return Err(BundleError::TopicNames(format!(
            "name of topic {k} is empty"
        )));
    }
    Ok(())
}

/// Replaces the topic names and persists them with write-temp-then-rename.
/// On error neither the file nor `bundle` is modified.
pub fn save_topic_names<T: Scalar>(bundle: &mut CorpusBundle<T>, names: Vec<String>) -> Result<()> {
    let location = bundle.location.as_ref().ok_or(BundleError::NotPersisted)?;
    write_topic_names(location, &names, bundle.n_topics())?;
    bundle.topic_names = names;
    Ok(())
}

/// Validates and atomically writes the topic names file of a bundle on disk.
pub fn write_topic_names(
    location: &BundleLocation,
    names: &[String],
    n_topics: usize,
) -> Result<()> {
    check_topic_names(names, n_topics)?;
    let bytes = serde_json::to_vec_pretty(names).expect("names serialize");
    write_atomic(&location.topic_names_path(), &bytes)
}
