use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::wordcloud::WordcloudLayout;
use super::{LayoutError, Result};

/// tab20 qualitative palette.
pub const DEFAULT_PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
    "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
    "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];
pub const DEFAULT_INK: &str = "#333333";
/// Stroke patterns marking the second, third, … pass through the palette.
const CYCLE_DASHES: [&str; 4] = ["4 2", "1 2", "6 2 1 2", "2 4"];
const MARGIN: f64 = 40.0;
const TITLE_SPACE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    TopicMap,
    WordMap,
    DocumentMap,
    GroupMap,
    TermBars,
    Wordcloud,
    Timeline,
}

impl FigureKind {
    pub const ALL: [FigureKind; 7] = [
        FigureKind::TopicMap,
        FigureKind::WordMap,
        FigureKind::DocumentMap,
        FigureKind::GroupMap,
        FigureKind::TermBars,
        FigureKind::Wordcloud,
        FigureKind::Timeline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureKind::TopicMap => "topic_map",
            FigureKind::WordMap => "word_map",
            FigureKind::DocumentMap => "document_map",
            FigureKind::GroupMap => "group_map",
            FigureKind::TermBars => "term_bars",
            FigureKind::Wordcloud => "wordcloud",
            FigureKind::Timeline => "timeline",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            FigureKind::TopicMap => "topic",
            FigureKind::WordMap => "word",
            FigureKind::DocumentMap => "doc",
            FigureKind::GroupMap => "group",
            FigureKind::TermBars => "bar",
            FigureKind::Wordcloud => "wc",
            FigureKind::Timeline => "series",
        }
    }

    /// Largest marker radius as a fraction of the shorter plot side.
    fn max_radius(self) -> f64 {
        match self {
            FigureKind::TopicMap => 0.08,
            FigureKind::GroupMap => 0.05,
            _ => 0.012,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub width: f64,
    pub height: f64,
    /// Series colors, cycled when there are more series than colors.
    pub palette: Vec<String>,
    /// Color of text, axes and outlines.
    pub ink: String,
    pub font_family: String,
    pub title: Option<String>,
}

impl FigureSpec {
    pub fn new(kind: FigureKind) -> Self {
        Self {
            kind,
            width: 800.0,
            height: 600.0,
            palette: DEFAULT_PALETTE.iter().map(|c| c.to_string()).collect(),
            ink: DEFAULT_INK.to_string(),
            font_family: "sans-serif".to_string(),
            title: None,
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.width > 0.0
            && self.height > 0.0
            && self.width.is_finite()
            && self.height.is_finite())
        {
            return Err(LayoutError::InvalidCanvas {
                width: self.width,
                height: self.height,
            });
        }
        if self.palette.is_empty() {
            return Err(LayoutError::EmptyPalette);
        }
        Ok(())
    }

    fn color(&self, series: usize) -> &str {
        &self.palette[series % self.palette.len()]
    }

    fn dash(&self, series: usize) -> Option<&'static str> {
        match series / self.palette.len() {
            0 => None,
            cycle => Some(CYCLE_DASHES[(cycle - 1) % CYCLE_DASHES.len()]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub label: String,
    /// Marker area is proportional to this value.
    pub size: f64,
    /// Palette index, normally the dominant topic.
    pub series: usize,
    /// Whether the label is drawn next to the marker (it is always in the tooltip).
    pub show_label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSeries {
    pub label: String,
    pub series: usize,
    pub values: Vec<f64>,
}

/// Data behind one figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FigureData {
    /// Any of the four maps.
    Scatter { points: Vec<ScatterPoint> },
    TermBars {
        items: Vec<(String, f64)>,
        series: usize,
    },
    Wordcloud {
        layout: WordcloudLayout,
        series: usize,
    },
    /// One value per window for each series; `positions` are window midpoints in tokens.
    Timeline {
        positions: Vec<f64>,
        series: Vec<TimelineSeries>,
    },
}

impl FigureData {
    fn name(&self) -> &'static str {
        match self {
            FigureData::Scatter { .. } => "scatter",
            FigureData::TermBars { .. } => "term_bars",
            FigureData::Wordcloud { .. } => "wordcloud",
            FigureData::Timeline { .. } => "timeline",
        }
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // not allowed in XML 1.0
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Fixed two-decimal formatting with `-0.00` normalized.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Frame {
    fn of(spec: &FigureSpec) -> Self {
        let top = MARGIN
            + if spec.title.is_some() {
                TITLE_SPACE
            } else {
                0.0
            };
        let m = MARGIN.min(spec.width / 4.0).min(spec.height / 4.0);
        Self {
            x0: m,
            y0: top.min(spec.height / 3.0),
            x1: spec.width - m,
            y1: spec.height - m,
        }
    }

    fn w(&self) -> f64 {
        self.x1 - self.x0
    }

    fn h(&self) -> f64 {
        self.y1 - self.y0
    }
}

fn header(svg: &mut String, spec: &FigureSpec) {
    let (w, h) = (num(spec.width), num(spec.height));
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"{}\" data-kind=\"{}\">",
        esc(&spec.font_family),
        spec.kind.as_str()
    );
    if let Some(title) = &spec.title {
        let _ = writeln!(svg, "<title>{}</title>", esc(title));
        let _ = writeln!(
            svg,
            "<text id=\"title\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"18.00\" fill=\"{}\">{}</text>",
            num(spec.width / 2.0),
            num(MARGIN.min(spec.height / 4.0)),
            esc(&spec.ink),
            esc(title)
        );
    }
}

fn style(spec: &FigureSpec, series: usize, stroke_only: bool) -> String {
    let c = esc(spec.color(series));
    let mut s = if stroke_only {
        format!("fill=\"none\" stroke=\"{c}\" stroke-width=\"2.00\"")
    } else {
        format!("fill=\"{c}\" fill-opacity=\"0.75\" stroke=\"{c}\"")
    };
    if let Some(d) = spec.dash(series) {
        let _ = write!(s, " stroke-dasharray=\"{d}\"");
        if !stroke_only {
            s.push_str(" stroke-width=\"2.00\"");
        }
    }
    s
}

fn scatter(svg: &mut String, spec: &FigureSpec, points: &[ScatterPoint]) -> Result<()> {
    if let Some(p) = points
        .iter()
        .find(|p| !(p.x.is_finite() && p.y.is_finite() && p.size.is_finite() && p.size >= 0.0))
    {
        return Err(LayoutError::InvalidData(format!(
            "point '{}' has non-finite or negative values",
            p.label
        )));
    }
    let f = Frame::of(spec);
    let r_max = spec.kind.max_radius() * f.w().min(f.h());
    let s_max = points.iter().map(|p| p.size).fold(0.0, f64::max);
    let radius = |s: f64| {
        if s_max > 0.0 {
            r_max * (s / s_max).sqrt()
        } else {
            0.0
        }
    };
    // uniform scale keeps distances comparable along both axes
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in points {
        lo_x = lo_x.min(p.x);
        hi_x = hi_x.max(p.x);
        lo_y = lo_y.min(p.y);
        hi_y = hi_y.max(p.y);
    }
    let inner_w = (f.w() - 2.0 * r_max).max(1.0);
    let inner_h = (f.h() - 2.0 * r_max).max(1.0);
    let span = (hi_x - lo_x).max(hi_y - lo_y);
    let scale = if span > 0.0 {
        (inner_w / (hi_x - lo_x).max(1e-300)).min(inner_h / (hi_y - lo_y).max(1e-300))
    } else {
        0.0
    };
    let (mx, my) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
    let (cx, cy) = ((f.x0 + f.x1) / 2.0, (f.y0 + f.y1) / 2.0);
    let _ = writeln!(
        svg,
        "<rect id=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.50\"/>",
        num(f.x0),
        num(f.y0),
        num(f.w()),
        num(f.h()),
        esc(&spec.ink)
    );
    // larger markers first so small ones stay visible
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].size.total_cmp(&points[a].size).then(a.cmp(&b)));
    svg.push_str("<g id=\"markers\">\n");
    for i in order {
        let p = &points[i];
        let (x, y) = (cx + (p.x - mx) * scale, cy - (p.y - my) * scale);
        let _ = writeln!(
            svg,
            "<circle id=\"{}-{i}\" cx=\"{}\" cy=\"{}\" r=\"{}\" {}><title>{}</title></circle>",
            spec.kind.id_prefix(),
            num(x),
            num(y),
            num(radius(p.size)),
            style(spec, p.series, false),
            esc(&p.label)
        );
    }
    svg.push_str("</g>\n<g id=\"labels\">\n");
    for (i, p) in points.iter().enumerate().filter(|(_, p)| p.show_label) {
        let (x, y) = (cx + (p.x - mx) * scale, cy - (p.y - my) * scale);
        let _ = writeln!(
            svg,
            "<text id=\"label-{i}\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\" font-size=\"12.00\" fill=\"{}\">{}</text>",
            num(x),
            num(y),
            esc(&spec.ink),
            esc(&p.label)
        );
    }
    svg.push_str("</g>\n");
    Ok(())
}

fn term_bars(
    svg: &mut String,
    spec: &FigureSpec,
    items: &[(String, f64)],
    series: usize,
) -> Result<()> {
    if items.iter().any(|(_, w)| !w.is_finite()) {
        return Err(LayoutError::InvalidData(
            "bar weights must be finite".into(),
        ));
    }
    let f = Frame::of(spec);
    let label_w = (f.w() * 0.3).min(200.0);
    let bar_x = f.x0 + label_w;
    let w_max = items.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max);
    let row = if items.is_empty() {
        0.0
    } else {
        f.h() / items.len() as f64
    };
    let font = (row * 0.6).clamp(6.0, 14.0);
    svg.push_str("<g id=\"bars\">\n");
    for (i, (term, w)) in items.iter().enumerate() {
        let len = if w_max > 0.0 {
            (f.x1 - bar_x) * w.max(0.0) / w_max
        } else {
            0.0
        };
        let y = f.y0 + row * i as f64;
        let _ = writeln!(
            svg,
            "<rect id=\"bar-{i}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" {}><title>{}: {}</title></rect>",
            num(bar_x),
            num(y + row * 0.1),
            num(len),
            num(row * 0.8),
            style(spec, series, false),
            esc(term),
            w
        );
        let _ = writeln!(
            svg,
            "<text id=\"bar-label-{i}\" x=\"{}\" y=\"{}\" text-anchor=\"end\" dominant-baseline=\"central\" font-size=\"{}\" fill=\"{}\">{}</text>",
            num(bar_x - 6.0),
            num(y + row / 2.0),
            num(font),
            esc(&spec.ink),
            esc(term)
        );
    }
    svg.push_str("</g>\n");
    Ok(())
}

fn wordcloud(
    svg: &mut String,
    spec: &FigureSpec,
    layout: &WordcloudLayout,
    series: usize,
) -> Result<()> {
    // the layout was computed for its own canvas; fit it into the figure
    let top = if spec.title.is_some() {
        TITLE_SPACE + MARGIN / 2.0
    } else {
        0.0
    };
    let avail_h = (spec.height - top).max(1.0);
    let scale = (spec.width / layout.width).min(avail_h / layout.height);
    let ox = (spec.width - layout.width * scale) / 2.0;
    let oy = top + (avail_h - layout.height * scale) / 2.0;
    let _ = writeln!(
        svg,
        "<g id=\"words\" transform=\"translate({} {}) scale({scale:.6})\">",
        num(ox),
        num(oy),
    );
    for (i, p) in layout.placements.iter().enumerate() {
        let (x, y) = (num(p.x), num(p.y));
        let rotate = if p.rotation == 90 {
            format!(" transform=\"rotate(-90 {x} {y})\"")
        } else {
            String::new()
        };
        let _ = writeln!(
            svg,
            "<text id=\"wc-{i}\" x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" dominant-baseline=\"central\" font-size=\"{}\" fill=\"{}\"{rotate}>{}</text>",
            num(p.font_size),
            esc(spec.color(series)),
            esc(&p.term)
        );
    }
    svg.push_str("</g>\n");
    Ok(())
}

fn timeline(
    svg: &mut String,
    spec: &FigureSpec,
    positions: &[f64],
    series: &[TimelineSeries],
) -> Result<()> {
    if series.iter().any(|s| s.values.len() != positions.len()) {
        return Err(LayoutError::InvalidData(
            "every series needs one value per window".into(),
        ));
    }
    if positions
        .iter()
        .chain(series.iter().flat_map(|s| &s.values))
        .any(|v| !v.is_finite())
    {
        return Err(LayoutError::InvalidData(
            "timeline values must be finite".into(),
        ));
    }
    let f = Frame::of(spec);
    let lo = positions.first().copied().unwrap_or(0.0);
    let hi = positions.last().copied().unwrap_or(0.0);
    let x_of = |p: f64| {
        if hi > lo {
            f.x0 + (p - lo) / (hi - lo) * f.w()
        } else {
            (f.x0 + f.x1) / 2.0
        }
    };
    let y_max = series
        .iter()
        .flat_map(|s| &s.values)
        .fold(0.0f64, |m, &v| m.max(v));
    let y_of = |v: f64| {
        if y_max > 0.0 {
            f.y1 - v.max(0.0) / y_max * f.h()
        } else {
            f.y1
        }
    };
    let _ = writeln!(
        svg,
        "<path id=\"axes\" d=\"M{} {} L{} {} L{} {}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.00\"/>",
        num(f.x0),
        num(f.y0),
        num(f.x0),
        num(f.y1),
        num(f.x1),
        num(f.y1),
        esc(&spec.ink)
    );
    svg.push_str("<g id=\"series\">\n");
    for (i, s) in series.iter().enumerate() {
        let mut d = String::new();
        for (k, (&p, &v)) in positions.iter().zip(&s.values).enumerate() {
            let _ = write!(
                d,
                "{}{} {}",
                if k == 0 { "M" } else { " L" },
                num(x_of(p)),
                num(y_of(v))
            );
        }
        if positions.len() == 1 {
            let _ = write!(
                d,
                " L{} {}",
                num(x_of(positions[0]) + 1.0),
                num(y_of(s.values[0]))
            );
        }
        let _ = writeln!(
            svg,
            "<path id=\"series-{i}\" d=\"{d}\" {}><title>{}</title></path>",
            style(spec, s.series, true),
            esc(&s.label)
        );
    }
    svg.push_str("</g>\n");
    Ok(())
}

/// Renders one figure as a standalone SVG 1.1 document. Identical inputs give
/// byte-identical output.
pub fn render_figure(spec: &FigureSpec, data: &FigureData) -> Result<String> {
    spec.validate()?;
    let matches = matches!(
        (spec.kind, data),
        (
            FigureKind::TopicMap
                | FigureKind::WordMap
                | FigureKind::DocumentMap
                | FigureKind::GroupMap,
            FigureData::Scatter { .. }
        ) | (FigureKind::TermBars, FigureData::TermBars { .. })
            | (FigureKind::Wordcloud, FigureData::Wordcloud { .. })
            | (FigureKind::Timeline, FigureData::Timeline { .. })
    );
    if !matches {
        return Err(LayoutError::KindMismatch {
            kind: spec.kind.as_str(),
            data: data.name(),
        });
    }
    let mut svg = String::new();
    header(&mut svg, spec);
    match data {
        FigureData::Scatter { points } => scatter(&mut svg, spec, points)?,
        FigureData::TermBars { items, series } => term_bars(&mut svg, spec, items, *series)?,
        FigureData::Wordcloud { layout, series } => wordcloud(&mut svg, spec, layout, *series)?,
        FigureData::Timeline { positions, series } => timeline(&mut svg, spec, positions, series)?,
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
