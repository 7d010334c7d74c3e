use std::collections::HashSet;
use std::fmt;

use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use super::tokenize::TermMatcher;
use super::CorpusBundle;
use crate::Scalar;

/// How many offending items a single aggregated issue lists.
const LIST_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub code: &'static str,
    pub message: String,
    pub location: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} ({})", self.code, self.message, self.location)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    fn error(&mut self, code: &'static str, message: String, location: impl Into<String>) {
        self.errors.push(Issue {
            code,
            message,
            location: location.into(),
        });
    }

    fn warn(&mut self, code: &'static str, message: String, location: impl Into<String>) {
        self.warnings.push(Issue {
            code,
            message,
            location: location.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning {w}")?;
        }
        Ok(())
    }
}

fn listing<I: IntoIterator<Item = S>, S: AsRef<str>>(items: I, total: usize) -> String {
    let mut out: Vec<String> = items
        .into_iter()
        .take(LIST_LIMIT)
        .map(|s| format!("{:?}", s.as_ref()))
        .collect();
    if total > LIST_LIMIT {
        out.push(format!("… {} more", total - LIST_LIMIT));
    }
    out.join(", ")
}

fn negative_entries<T: Scalar>(
    report: &mut ValidationReport,
    m: &ndarray::Array2<T>,
    name: &str,
    code: &'static str,
) {
    let mut first = None;
    let mut count = 0usize;
    for ((r, c), v) in m.indexed_iter() {
        if *v < T::zero() {
            count += 1;
            first.get_or_insert((r, c, *v));
        }
    }
    if let Some((r, c, v)) = first {
        report.warn(
            code,
            format!("negative {name} entry: {count} value(s) below 0, first {v} at [{r},{c}]"),
            format!("{name}[{r},{c}]"),
        );
    }
}

/// Checks every bundle invariant. Violations are errors; suspicious but
/// tolerated content (negative weights, empty documents, unused terms) are warnings.
pub fn validate_bundle<T: Scalar>(bundle: &CorpusBundle<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (n, m, d) = (bundle.n_topics(), bundle.n_terms(), bundle.n_docs());

    if bundle.phi.ncols() != m {
        report.error(
            "phi_shape",
            format!(
                "phi columns ({}) != vocabulary size ({m})",
                bundle.phi.ncols()
            ),
            "phi",
        );
    }
    if bundle.theta.nrows() != d {
        report.error(
            "theta_shape",
            format!("theta rows ({}) != documents ({d})", bundle.theta.nrows()),
            "theta",
        );
    }
    if bundle.theta.ncols() != n {
        report.error(
            "theta_shape",
            format!("theta columns ({}) != phi rows ({n})", bundle.theta.ncols()),
            "theta",
        );
    }
    if bundle.topic_names.len() != n {
        report.error(
            "topic_names_length",
            format!("topic names ({}) != topics ({n})", bundle.topic_names.len()),
            "topic_names",
        );
    }
    for (k, name) in bundle.topic_names.iter().enumerate() {
        if name.trim().is_empty() {
            report.error(
                "empty_topic_name",
                format!("topic {k} has an empty name"),
                format!("topic_names[{k}]"),
            );
        }
    }

    let mut seen = HashSet::with_capacity(m);
    for (i, term) in bundle.vocabulary.iter().enumerate() {
        let loc = format!("vocabulary[{i}]");
        if term.is_empty() {
            report.error("empty_term", "empty vocabulary term".into(), loc);
            continue;
        }
        if !seen.insert(term.as_str()) {
            report.error(
                "duplicate_term",
                format!("duplicate vocabulary term {term:?}"),
                loc.clone(),
            );
        }
        if term.nfc().ne(term.chars()) {
            report.error(
                "term_not_nfc",
                format!("vocabulary term {term:?} is not NFC-normalized"),
                loc,
            );
        }
    }

    let mut ids = HashSet::with_capacity(d);
    for (i, doc) in bundle.documents.iter().enumerate() {
        if !ids.insert(doc.id.as_str()) {
            report.error(
                "duplicate_document_id",
                format!("duplicate document id {:?}", doc.id),
                format!("documents[{i}]"),
            );
        }
    }

    let labelled = bundle
        .documents
        .iter()
        .filter(|doc| doc.group.is_some())
        .count();
    if labelled != 0 && labelled != d {
        report.error(
            "group_labels_length",
            format!("group labels ({labelled}) != documents ({d})"),
            "documents",
        );
    }
    if let Some(emb) = &bundle.doc_embeddings {
        if emb.nrows() != d {
            report.error(
                "embeddings_shape",
                format!("doc_embeddings rows ({}) != documents ({d})", emb.nrows()),
                "doc_embeddings",
            );
        }
    }
    if let Some(dt) = &bundle.doc_term {
        if dt.n_docs() != d || dt.n_terms() != m {
            report.error(
                "doc_term_shape",
                format!(
                    "doc_term shape ({}x{}) != documents x vocabulary ({d}x{m})",
                    dt.n_docs(),
                    dt.n_terms()
                ),
                "doc_term",
            );
        }
    }

    negative_entries(&mut report, &bundle.phi, "phi", "negative_phi");
    negative_entries(&mut report, &bundle.theta, "theta", "negative_theta");

    let empty: Vec<&str> = bundle
        .documents
        .iter()
        .filter(|doc| doc.text.trim().is_empty())
        .map(|doc| doc.id.as_str())
        .collect();
    if !empty.is_empty() {
        report.warn(
            "empty_document",
            format!(
                "{} empty document(s): {}",
                empty.len(),
                listing(&empty, empty.len())
            ),
            "documents",
        );
    }

    let matcher = TermMatcher::new(&bundle.vocabulary);
    let mut occurring = vec![false; m];
    for doc in &bundle.documents {
        for occ in matcher.find(&doc.text) {
            occurring[occ.term] = true;
        }
    }
    let unused: Vec<&str> = occurring
        .iter()
        .enumerate()
        .filter(|(_, hit)| !**hit)
        .map(|(i, _)| bundle.vocabulary[i].as_str())
        .collect();
    if !unused.is_empty() {
        report.warn(
            "unused_term",
            format!(
                "{} vocabulary term(s) never occur in any document: {}",
                unused.len(),
                listing(&unused, unused.len())
            ),
            "vocabulary",
        );
    }
    report
}
