use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::Json;
use serde::{Deserialize, Serialize};
use topicscope_core::cache::MapKind;
use topicscope_core::interpret::{
    document_highlights, document_timeline, group_wordcloud_weights, nearest_words, snippet,
    word_topic_distribution, RankedTerm, TopicSummary, DEFAULT_STRIDE, DEFAULT_WINDOW,
    GROUP_WORDCLOUD_SIZE,
};
use topicscope_core::layout::WordcloudLayout;
use topicscope_core::manifold::ProjectionMethod;
use topicscope_core::{HighlightSpan, Timeline, UmapParams};

use crate::error::{ApiError, ApiResult};
use crate::state::{AppState, CacheSource};

type AppJson<T> = ApiResult<Json<T>>;
type St = State<Arc<AppState>>;

/// Longest accepted topic name, in characters.
pub const MAX_NAME_CHARS: usize = 200;
pub const DEFAULT_N_ASSOC: usize = 20;
pub const DEFAULT_SNIPPET_CHARS: usize = 1000;
/// Top terms listed per topic in `/api/topics`.
pub const LIST_TOP_TERMS: usize = 10;
/// Terms highlighted in a document snippet.
pub const HIGHLIGHT_TERMS: usize = 10;

#[derive(Serialize)]
pub struct Meta {
    n_topics: usize,
    n_docs: usize,
    n_terms: usize,
    has_groups: bool,
    bundle_hash: String,
    cache: CacheSource,
}

pub async fn meta(State(s): St) -> Json<Meta> {
    let b = s.bundle();
    Json(Meta {
        n_topics: b.n_topics(),
        n_docs: b.n_docs(),
        n_terms: b.n_terms(),
        has_groups: b.has_groups(),
        bundle_hash: s.bundle_hash().to_string(),
        cache: s.cache_source(),
    })
}

fn topic_id(s: &AppState, raw: &str) -> ApiResult<usize> {
    raw.parse::<usize>()
        .ok()
        .filter(|&t| t < s.bundle().n_topics())
        .ok_or_else(|| ApiError::not_found("topic", raw))
}

fn summary(s: &AppState, names: &[String], t: usize, k: usize) -> TopicSummary<f64> {
    let b = s.bundle();
    let top_terms = s.summary.top_terms[t]
        .iter()
        .take(k)
        .map(|&(m, w)| RankedTerm {
            term_id: m,
            term: b.vocabulary[m].clone(),
            weight: w,
        })
        .collect();
    TopicSummary {
        topic_id: t,
        name: names[t].clone(),
        importance: s.summary.importances[t],
        top_terms,
        dominant_documents: s.summary.dominance_counts[t],
    }
}

pub async fn topics(State(s): St) -> Json<Vec<TopicSummary<f64>>> {
    let names = s.topic_names();
    Json(
        (0..s.bundle().n_topics())
            .map(|t| summary(&s, &names, t, LIST_TOP_TERMS))
            .collect(),
    )
}

pub async fn topic(State(s): St, Path(id): Path<String>) -> AppJson<TopicSummary<f64>> {
    let t = topic_id(&s, &id)?;
    Ok(Json(summary(&s, &s.topic_names(), t, s.params.top_terms)))
}

#[derive(Deserialize)]
pub struct Rename {
    name: String,
}

pub async fn rename_topic(
    State(s): St,
    Path(id): Path<String>,
    body: Result<Json<Rename>, axum::extract::rejection::JsonRejection>,
) -> AppJson<TopicSummary<f64>> {
    let t = topic_id(&s, &id)?;
    let Json(Rename { name }) = body.map_err(|e| ApiError::invalid(e.body_text()))?;
    if name.trim().is_empty() {
        return Err(ApiError::invalid("name must not be empty"));
    }
    if name.chars().count() > MAX_NAME_CHARS {
        return Err(ApiError::invalid(format!(
            "name longer than {MAX_NAME_CHARS} characters"
        )));
    }
    s.rename(t, name).await?;
    Ok(Json(summary(&s, &s.topic_names(), t, s.params.top_terms)))
}

#[derive(Serialize)]
pub struct TopicWordcloud {
    topic_id: usize,
    /// `null` when the topic has no positive term weight.
    layout: Option<WordcloudLayout>,
}

pub async fn topic_wordcloud(State(s): St, Path(id): Path<String>) -> AppJson<TopicWordcloud> {
    let t = topic_id(&s, &id)?;
    Ok(Json(TopicWordcloud {
        topic_id: t,
        layout: s.wordcloud(t).await?,
    }))
}

#[derive(Deserialize)]
pub struct MapQuery {
    fallback: Option<String>,
}

#[derive(Serialize)]
pub struct MapResponse {
    map: &'static str,
    method: ProjectionMethod,
    /// Row labels: topic names, terms, document ids or group labels.
    labels: Vec<String>,
    coords: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<UmapParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ab: Option<(f64, f64)>,
}

pub async fn map(
    State(s): St,
    Path(kind): Path<String>,
    Query(q): Query<MapQuery>,
) -> AppJson<MapResponse> {
    let kind = MapKind::parse(&kind).ok_or_else(|| ApiError::not_found("map", &kind))?;
    let pca = match q.fallback.as_deref() {
        None => false,
        Some("pca") => true,
        Some(other) => {
            return Err(ApiError::invalid(format!(
                "unknown fallback '{other}', expected 'pca'"
            )))
        }
    };
    let no_groups = || {
        ApiError::new(
            axum::http::StatusCode::NOT_FOUND,
            "no_groups",
            "bundle has no group labels",
        )
    };
    let projection = s.map(kind, pca).await?.ok_or_else(no_groups)?;
    let b = s.bundle();
    let labels = match kind {
        MapKind::Topics => s.topic_names(),
        MapKind::Words => b.vocabulary.clone(),
        MapKind::Documents => b.documents.iter().map(|d| d.id.clone()).collect(),
        MapKind::Groups => s
            .summary
            .group_matrix
            .as_ref()
            .ok_or_else(no_groups)?
            .groups
            .clone(),
    };
    Ok(Json(MapResponse {
        map: kind.as_str(),
        method: projection.method,
        labels,
        coords: projection.coords,
        params: projection.params,
        ab: projection.ab,
    }))
}

#[derive(Deserialize)]
pub struct WordQuery {
    n_assoc: Option<usize>,
}

#[derive(Serialize)]
pub struct Association {
    term_id: usize,
    term: String,
    similarity: f64,
}

#[derive(Serialize)]
pub struct WordDetail {
    term_id: usize,
    term: String,
    /// The term's φ column is all zero, so it has no associations.
    zero_norm: bool,
    associations: Vec<Association>,
    /// Topic distribution of the term together with its associations.
    distribution: Vec<f64>,
    distribution_undefined: bool,
}

pub async fn word(
    State(s): St,
    Path(id): Path<String>,
    Query(q): Query<WordQuery>,
) -> AppJson<WordDetail> {
    let b = s.bundle();
    let m = id
        .parse::<usize>()
        .ok()
        .or_else(|| b.vocabulary.iter().position(|v| *v == id))
        .filter(|&m| m < b.n_terms())
        .ok_or_else(|| ApiError::not_found("term", &id))?;
    let n = q.n_assoc.unwrap_or(DEFAULT_N_ASSOC);
    if n == 0 {
        return Err(ApiError::invalid("n_assoc must be at least 1"));
    }
    let assoc = nearest_words(&b.phi, m, n).map_err(|e| ApiError::invalid(e.to_string()))?;
    let mut terms = vec![m];
    terms.extend(assoc.neighbors.iter().map(|&(j, _)| j));
    let dist =
        word_topic_distribution(&b.phi, &terms).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(WordDetail {
        term_id: m,
        term: b.vocabulary[m].clone(),
        zero_norm: assoc.zero_norm,
        associations: assoc
            .neighbors
            .into_iter()
            .map(|(j, sim)| Association {
                term_id: j,
                term: b.vocabulary[j].clone(),
                similarity: sim,
            })
            .collect(),
        distribution: dist.values,
        distribution_undefined: dist.undefined,
    }))
}

#[derive(Deserialize)]
pub struct DocumentQuery {
    snippet_chars: Option<usize>,
    window: Option<usize>,
    stride: Option<usize>,
    topic: Option<usize>,
}

#[derive(Serialize)]
pub struct DocumentDetail {
    id: String,
    group: Option<String>,
    snippet: String,
    /// The snippet is shorter than the document.
    truncated: bool,
    /// Topic used for highlighting.
    topic: usize,
    topic_distribution: Vec<f64>,
    /// Spans inside the snippet only, as byte offsets.
    highlights: Vec<HighlightSpan>,
    window: usize,
    stride: usize,
    timeline: Timeline,
}

pub async fn document(
    State(s): St,
    Path(id): Path<String>,
    Query(q): Query<DocumentQuery>,
) -> AppJson<DocumentDetail> {
    let b = s.bundle();
    let d = b
        .doc_index(&id)
        .ok_or_else(|| ApiError::not_found("document", &id))?;
    let doc = &b.documents[d];
    let window = q.window.unwrap_or(DEFAULT_WINDOW);
    let stride = q.stride.unwrap_or(DEFAULT_STRIDE);
    if window == 0 || stride == 0 {
        return Err(ApiError::invalid("window and stride must be at least 1"));
    }
    let topic = match q.topic {
        Some(t) if t >= b.n_topics() => {
            return Err(ApiError::invalid(format!("topic {t} out of range")))
        }
        Some(t) => t,
        None => s.summary.dominant_topics[d],
    };
    let snip = snippet(&doc.text, q.snippet_chars.unwrap_or(DEFAULT_SNIPPET_CHARS));
    let mut highlights = if b.n_topics() == 0 {
        Vec::new()
    } else {
        document_highlights(
            &s.matcher.find(&doc.text),
            &s.phi_hat,
            topic,
            HIGHLIGHT_TERMS,
        )
        .map_err(|e| ApiError::internal(e.to_string()))?
    };
    highlights.retain(|h| h.end <= snip.len());
    let timeline = document_timeline(
        &s.matcher.token_terms(&doc.text),
        &s.phi_hat,
        window,
        stride,
    )
    .map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok(Json(DocumentDetail {
        id: doc.id.clone(),
        group: doc.group.clone(),
        snippet: snip.to_string(),
        truncated: snip.len() < doc.text.len(),
        topic,
        topic_distribution: b.theta.row(d).to_vec(),
        highlights,
        window,
        stride,
        timeline,
    }))
}

#[derive(Serialize)]
pub struct GroupEntry {
    group: String,
    n_docs: usize,
    dominant_topic: usize,
    values: Vec<f64>,
}

fn groups_of(s: &AppState) -> ApiResult<&topicscope_core::GroupTopicMatrix> {
    s.summary.group_matrix.as_ref().ok_or_else(|| {
        ApiError::new(
            axum::http::StatusCode::NOT_FOUND,
            "no_groups",
            "bundle has no group labels",
        )
    })
}

pub async fn groups(State(s): St) -> AppJson<Vec<GroupEntry>> {
    let g = groups_of(&s)?;
    let labels = s.bundle().group_labels().unwrap_or_default();
    Ok(Json(
        g.groups
            .iter()
            .zip(&g.values)
            .map(|(name, row)| GroupEntry {
                group: name.clone(),
                n_docs: labels.iter().filter(|l| **l == name.as_str()).count(),
                dominant_topic: argmax(row),
                values: row.clone(),
            })
            .collect(),
    ))
}

/// Index of the largest value, ties to the lower index.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize)]
pub struct GroupDetail {
    group: String,
    raw: Vec<f64>,
    /// Raw row scaled to sum to one; `null` when the row has no positive mass.
    normalized: Option<Vec<f64>>,
    undefined: bool,
    wordcloud: Vec<RankedTerm<u64>>,
}

pub async fn group(State(s): St, Path(id): Path<String>) -> AppJson<GroupDetail> {
    let g = groups_of(&s)?;
    let i = g
        .index_of(&id)
        .ok_or_else(|| ApiError::not_found("group", &id))?;
    let raw = g.values[i].clone();
    let total: f64 = raw.iter().sum();
    let normalized = (total > 0.0).then(|| raw.iter().map(|v| v / total).collect::<Vec<_>>());
    let b = s.bundle();
    let labels = b.group_labels().unwrap_or_default();
    let weights = group_wordcloud_weights(&b.doc_term_or_derived(), &labels, &id)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    debug_assert!(weights.len() <= GROUP_WORDCLOUD_SIZE);
    Ok(Json(GroupDetail {
        group: id,
        undefined: normalized.is_none(),
        normalized,
        raw,
        wordcloud: weights
            .into_iter()
            .map(|(m, c)| RankedTerm {
                term_id: m,
                term: b.vocabulary[m].clone(),
                weight: c,
            })
            .collect(),
    }))
}
