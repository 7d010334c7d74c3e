use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::svg::{render_figure, FigureData, FigureKind, FigureSpec, ScatterPoint, TimelineSeries};
use super::{LayoutError, Result};
use crate::bundle::{persist_atomic, CorpusBundle, TermMatcher};
use crate::cache::{InterpretationCache, MapKind};
use crate::interpret::{
    document_timeline, dominant_topic, NormalizedPhi, DEFAULT_STRIDE, DEFAULT_WINDOW,
};
use crate::manifold::Projection2D;
use crate::Scalar;

pub const FIGURES_MANIFEST: &str = "figures_manifest.json";
/// Bars drawn per topic.
pub const TERM_BARS: usize = 10;

/// Settings applied to every exported figure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureOverrides {
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub palette: Option<Vec<String>>,
    pub font_family: Option<String>,
}

impl FigureOverrides {
    fn spec(&self, kind: FigureKind, title: String) -> FigureSpec {
        let mut spec = FigureSpec::new(kind).with_title(title);
        if let Some(w) = self.width {
            spec.width = w;
        }
        if let Some(h) = self.height {
            spec.height = h;
        }
        if let Some(p) = &self.palette {
            spec.palette = p.clone();
        }
        if let Some(f) = &self.font_family {
            spec.font_family = f.clone();
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigureFile {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: FigureKind,
    /// Topic index or document id the figure is about; `None` for maps.
    pub subject: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFigure {
    pub kind: FigureKind,
    pub subject: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiguresManifest {
    pub bundle_hash: String,
    pub files: Vec<FigureFile>,
    pub skipped: Vec<SkippedFigure>,
}

fn argmax<T: Scalar>(values: impl Iterator<Item = T>) -> usize {
    let v: Vec<T> = values.collect();
    if v.is_empty() {
        0
    } else {
        dominant_topic(ndarray::ArrayView1::from(&v[..]))
    }
}

fn scatter<T: Scalar>(
    projection: &Projection2D<T>,
    label: impl Fn(usize) -> (String, f64, usize, bool),
) -> FigureData {
    let points = projection
        .coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (label, size, series, show_label) = label(i);
            ScatterPoint {
                x: c[0].as_f64(),
                y: c[1].as_f64(),
                label,
                size,
                series,
                show_label,
            }
        })
        .collect();
    FigureData::Scatter { points }
}

/// A figure to write: where, what and how.
pub type PlannedFigure = (FigureFile, FigureSpec, FigureData);

/// The figure set for a bundle: the four maps, then term bars and a wordcloud per
/// topic, then a timeline per document.
pub fn figure_set<T: Scalar>(
    bundle: &CorpusBundle<T>,
    cache: &InterpretationCache<T>,
    overrides: &FigureOverrides,
) -> Result<(Vec<PlannedFigure>, Vec<SkippedFigure>)> {
    cache.check(bundle).map_err(|_| LayoutError::StaleCache {
        expected: bundle.content_hash(),
        found: cache.bundle_hash.clone(),
    })?;
    let s = &cache.summary;
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    let mut push = |path: String,
                    kind: FigureKind,
                    subject: Option<String>,
                    title: String,
                    data: FigureData| {
        out.push((
            FigureFile {
                path,
                kind,
                subject,
            },
            overrides.spec(kind, title),
            data,
        ));
    };

    let topics = scatter(&cache.maps.topics, |t| {
        (
            bundle.topic_names[t].clone(),
            s.importances[t].as_f64().max(0.0),
            t,
            true,
        )
    });
    push(
        "topic_map.svg".into(),
        FigureKind::TopicMap,
        None,
        "Topics".into(),
        topics,
    );

    let words = scatter(&cache.maps.words, |m| {
        let series = argmax(bundle.phi.column(m).iter().copied());
        (
            bundle.vocabulary[m].clone(),
            s.term_prevalence[m].as_f64(),
            series,
            false,
        )
    });
    push(
        "word_map.svg".into(),
        FigureKind::WordMap,
        None,
        "Words".into(),
        words,
    );

    let docs = scatter(&cache.maps.documents, |d| {
        (
            bundle.documents[d].id.clone(),
            1.0,
            s.dominant_topics[d],
            false,
        )
    });
    push(
        "document_map.svg".into(),
        FigureKind::DocumentMap,
        None,
        "Documents".into(),
        docs,
    );

    match (cache.maps.get(MapKind::Groups), &s.group_matrix) {
        (Some(proj), Some(g)) => {
            let groups = scatter(proj, |i| {
                let row = &g.values[i];
                let total: f64 = row.iter().map(|v| v.as_f64()).sum();
                (
                    g.groups[i].clone(),
                    total.max(0.0),
                    argmax(row.iter().copied()),
                    true,
                )
            });
            push(
                "group_map.svg".into(),
                FigureKind::GroupMap,
                None,
                "Groups".into(),
                groups,
            );
        }
        _ => skipped.push(SkippedFigure {
            kind: FigureKind::GroupMap,
            subject: None,
            reason: "bundle has no group labels".into(),
        }),
    }

    for t in 0..bundle.n_topics() {
        let name = &bundle.topic_names[t];
        let items = s.top_terms[t]
            .iter()
            .take(TERM_BARS)
            .map(|&(m, w)| (bundle.vocabulary[m].clone(), w.as_f64()))
            .collect();
        push(
            format!("term_bars/topic-{t}.svg"),
            FigureKind::TermBars,
            Some(t.to_string()),
            name.clone(),
            FigureData::TermBars { items, series: t },
        );
    }
    for t in 0..bundle.n_topics() {
        match cache.wordclouds.get(t).cloned().flatten() {
            Some(layout) => push(
                format!("wordclouds/topic-{t}.svg"),
                FigureKind::Wordcloud,
                Some(t.to_string()),
                bundle.topic_names[t].clone(),
                FigureData::Wordcloud { layout, series: t },
            ),
            None => skipped.push(SkippedFigure {
                kind: FigureKind::Wordcloud,
                subject: Some(t.to_string()),
                reason: "topic has no positive term weights".into(),
            }),
        }
    }

    let matcher = TermMatcher::new(&bundle.vocabulary);
    let hat = NormalizedPhi::new(&bundle.phi);
    for (d, doc) in bundle.documents.iter().enumerate() {
        let timeline = document_timeline(
            &matcher.token_terms(&doc.text),
            &hat,
            DEFAULT_WINDOW,
            DEFAULT_STRIDE,
        )
        .map_err(|e| LayoutError::InvalidData(e.to_string()))?;
        let positions = timeline
            .windows
            .iter()
            .map(|w| (w.token_start + w.token_end) as f64 / 2.0)
            .collect();
        let series = (0..bundle.n_topics())
            .map(|t| TimelineSeries {
                label: bundle.topic_names[t].clone(),
                series: t,
                values: timeline
                    .windows
                    .iter()
                    .map(|w| w.distribution[t].as_f64())
                    .collect(),
            })
            .collect();
        push(
            format!("timelines/document-{d}.svg"),
            FigureKind::Timeline,
            Some(doc.id.clone()),
            doc.id.clone(),
            FigureData::Timeline { positions, series },
        );
    }
    Ok((out, skipped))
}

/// Renders every figure into `out_dir` and writes `figures_manifest.json`.
/// Rerunning on an unchanged bundle and cache rewrites identical files.
pub fn export_all<T: Scalar>(
    bundle: &CorpusBundle<T>,
    cache: &InterpretationCache<T>,
    out_dir: impl AsRef<Path>,
    overrides: &FigureOverrides,
) -> Result<FiguresManifest> {
    let out_dir = out_dir.as_ref();
    let (figures, skipped) = figure_set(bundle, cache, overrides)?;
    let write = |rel: &str, bytes: &[u8]| -> Result<()> {
        let path = out_dir.join(rel);
        let io = |source| LayoutError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        persist_atomic(&path, bytes).map_err(io)
    };
    let mut files = Vec::with_capacity(figures.len());
    for (file, spec, data) in figures {
        let svg = render_figure(&spec, &data)?;
        write(&file.path, svg.as_bytes())?;
        files.push(file);
    }
    let manifest = FiguresManifest {
        bundle_hash: cache.bundle_hash.clone(),
        files,
        skipped,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write(FIGURES_MANIFEST, json.as_bytes())?;
    Ok(manifest)
}
