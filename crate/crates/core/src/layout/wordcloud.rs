use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{LayoutError, Result};
use crate::manifold::rng::LayoutRng;

pub const MIN_FONT_SIZE: f64 = 10.0;
/// Largest font as a fraction of the shorter canvas side.
pub const MAX_FONT_FRACTION: f64 = 0.15;
/// Approximate glyph advance as a fraction of the font size.
pub const CHAR_WIDTH: f64 = 0.6;
pub const SPIRAL_STEP: f64 = 0.1;
/// Radius growth per radian of the placement spiral.
pub const SPIRAL_PITCH: f64 = 1.0;
/// Minimum gap kept between boxes.
pub const BOX_PADDING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    fn centred(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self {
            x0: x - w / 2.0,
            y0: y - h / 2.0,
            x1: x + w / 2.0,
            y1: y + h / 2.0,
        }
    }

    /// Interiors overlap.
    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    fn intersects_padded(&self, other: &BoundingBox, pad: f64) -> bool {
        self.x0 < other.x1 + pad
            && other.x0 < self.x1 + pad
            && self.y0 < other.y1 + pad
            && other.y0 < self.y1 + pad
    }

    pub fn inside(&self, width: f64, height: f64) -> bool {
        self.x0 >= 0.0 && self.y0 >= 0.0 && self.x1 <= width && self.y1 <= height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub term: String,
    pub weight: f64,
    pub font_size: f64,
    /// Centre of the word.
    pub x: f64,
    pub y: f64,
    /// 0 or 90 degrees.
    pub rotation: u16,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordcloudLayout {
    pub width: f64,
    pub height: f64,
    pub placements: Vec<Placement>,
    /// Words that found no free position, heaviest first.
    pub dropped: Vec<String>,
}

/// Uniform grid over the canvas used to find candidate colliders quickly.
struct Grid {
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl Grid {
    fn new(width: f64, height: f64, cell: f64) -> Self {
        let cols = (width / cell).ceil().max(1.0) as usize;
        let rows = (height / cell).ceil().max(1.0) as usize;
        Self {
            cell,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
        }
    }

    fn span(&self, b: &BoundingBox) -> (usize, usize, usize, usize) {
        let clampc = |v: f64, n: usize| ((v / self.cell).floor().max(0.0) as usize).min(n - 1);
        (
            clampc(b.x0 - BOX_PADDING, self.cols),
            clampc(b.x1 + BOX_PADDING, self.cols),
            clampc(b.y0 - BOX_PADDING, self.rows),
            clampc(b.y1 + BOX_PADDING, self.rows),
        )
    }

    fn insert(&mut self, b: &BoundingBox, id: usize) {
        let (c0, c1, r0, r1) = self.span(b);
        for r in r0..=r1 {
            for c in c0..=c1 {
                self.cells[r * self.cols + c].push(id);
            }
        }
    }

    fn collides(&self, b: &BoundingBox, boxes: &[BoundingBox]) -> bool {
        let (c0, c1, r0, r1) = self.span(b);
        (r0..=r1).any(|r| {
            (c0..=c1).any(|c| {
                self.cells[r * self.cols + c]
                    .iter()
                    .any(|&id| boxes[id].intersects_padded(b, BOX_PADDING))
            })
        })
    }
}

/// Font size for weight `w` given the largest weight.
pub fn font_size(w: f64, w_max: f64, width: f64, height: f64) -> f64 {
    // on canvases too small for the minimum size all words share it
    let max_size = (MAX_FONT_FRACTION * width.min(height)).max(MIN_FONT_SIZE);
    MIN_FONT_SIZE + (max_size - MIN_FONT_SIZE) * (w / w_max).sqrt()
}

/// Places words largest-first along an Archimedean spiral from the canvas centre.
///
/// Zero-weight words are ignored. Order of `weights` does not matter: words are
/// sorted by weight descending, then by term. Each word's orientation comes from a
/// seeded coin flip in that order.
pub fn layout_wordcloud(
    weights: &[(String, f64)],
    width: f64,
    height: f64,
    seed: u64,
) -> Result<WordcloudLayout> {
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(LayoutError::InvalidCanvas { width, height });
    }
    let mut seen = HashSet::new();
    for (term, w) in weights {
        if !seen.insert(term.as_str()) {
            return Err(LayoutError::DuplicateTerm(term.clone()));
        }
        if !(w.is_finite() && *w >= 0.0) {
            return Err(LayoutError::InvalidWeight {
                term: term.clone(),
                weight: *w,
            });
        }
    }
    let mut words: Vec<&(String, f64)> = weights.iter().filter(|(_, w)| *w > 0.0).collect();
    if words.is_empty() {
        return Err(LayoutError::NoPositiveWeights);
    }
    words.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let w_max = words[0].1;

    let mut rng = LayoutRng::for_optimization(seed, words.len());
    let (cx, cy) = (width / 2.0, height / 2.0);
    let max_radius = width.hypot(height) / 2.0;
    let mut grid = Grid::new(width, height, 4.0 * MIN_FONT_SIZE);
    let mut boxes: Vec<BoundingBox> = Vec::new();
    let mut placements = Vec::new();
    let mut dropped = Vec::new();

    for (term, w) in words {
        let rotated = rng.coin();
        let size = font_size(*w, w_max, width, height);
        let long = CHAR_WIDTH * size * term.chars().count().max(1) as f64;
        let (bw, bh) = if rotated { (size, long) } else { (long, size) };
        let mut theta = 0.0f64;
        let mut found = None;
        loop {
            let r = SPIRAL_PITCH * theta;
            if r > max_radius {
                break;
            }
            let (x, y) = (cx + r * theta.cos(), cy + r * theta.sin());
            let b = BoundingBox::centred(x, y, bw, bh);
            if b.inside(width, height) && !grid.collides(&b, &boxes) {
                found = Some((x, y, b));
                break;
            }
            theta += SPIRAL_STEP;
        }
        match found {
            Some((x, y, bbox)) => {
                grid.insert(&bbox, boxes.len());
                boxes.push(bbox);
                placements.push(Placement {
                    term: term.clone(),
                    weight: *w,
                    font_size: size,
                    x,
                    y,
                    rotation: if rotated { 90 } else { 0 },
                    bbox,
                });
            }
            None => dropped.push(term.clone()),
        }
    }
    Ok(WordcloudLayout {
        width,
        height,
        placements,
        dropped,
    })
}
