//! Wordcloud placement and SVG figures.

mod export;
mod svg;
mod wordcloud;

use std::path::PathBuf;

use thiserror::Error;

pub use export::{
    export_all, figure_set, FigureFile, FigureOverrides, FiguresManifest, PlannedFigure,
    SkippedFigure, FIGURES_MANIFEST, TERM_BARS,
};
pub use svg::{
    render_figure, FigureData, FigureKind, FigureSpec, ScatterPoint, TimelineSeries, DEFAULT_INK,
    DEFAULT_PALETTE,
};
pub use wordcloud::{
    font_size, layout_wordcloud, BoundingBox, Placement, WordcloudLayout, MIN_FONT_SIZE,
};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("canvas must have positive finite size, got {width}x{height}")]
    InvalidCanvas { width: f64, height: f64 },
    #[error("no word has a positive weight")]
    NoPositiveWeights,
    #[error("duplicate term '{0}'")]
    DuplicateTerm(String),
    #[error("term '{term}' has invalid weight {weight}")]
    InvalidWeight { term: String, weight: f64 },
    #[error("palette is empty")]
    EmptyPalette,
    #[error("{kind} figure cannot show {data} data")]
    KindMismatch {
        kind: &'static str,
        data: &'static str,
    },
    #[error("invalid figure data: {0}")]
    InvalidData(String),
    #[error("cache was built for bundle {found}, current bundle is {expected}")]
    StaleCache { expected: String, found: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, LayoutError>;
