use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::RelBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// Pre-softmax attention scores.
    Logits,
    /// Post-softmax attention weights.
    Probs,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::Logits => "logits",
            MapKind::Probs => "probs",
        }
    }
}

/// One token's attention over a `height × width` lattice, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ShapeMismatch("grid dimensions must be positive".into()));
        }
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} grid needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite attention value {v}")));
        }
        Ok(Grid { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0 && value.is_finite());
        Grid {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Grid::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Writes one cell. Panics on a non-finite value.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(value.is_finite(), "attention values must stay finite");
        self.values[row * self.width + col] = value;
    }

    /// Applies `f(row, col, value)` to every cell.
    pub fn map_cells(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        for r in 0..self.height {
            for c in 0..self.width {
                let i = r * self.width + c;
                let v = f(r, c, self.values[i]);
                assert!(v.is_finite(), "attention values must stay finite");
                self.values[i] = v;
            }
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn region_sum(&self, region: &PixelRegion) -> f64 {
        region
            .rows()
            .map(|r| {
                let base = r * self.width;
                self.values[base + region.col_start..base + region.col_end].iter().sum::<f64>()
            })
            .sum()
    }

    /// Copy of the cells inside `region`.
    pub fn patch(&self, region: &PixelRegion) -> Grid {
        let mut values = Vec::with_capacity(region.area());
        for r in region.rows() {
            let base = r * self.width;
            values.extend_from_slice(&self.values[base + region.col_start..base + region.col_end]);
        }
        Grid {
            width: region.width(),
            height: region.height(),
            values,
        }
    }

    /// Writes `patch` with its top-left corner at (`row`, `col`).
    pub fn paste(&mut self, patch: &Grid, row: usize, col: usize) {
        assert!(row + patch.height <= self.height && col + patch.width <= self.width);
        for r in 0..patch.height {
            let dst = (row + r) * self.width + col;
            let src = r * patch.width;
            self.values[dst..dst + patch.width].copy_from_slice(&patch.values[src..src + patch.width]);
        }
    }

    pub fn fill_region(&mut self, region: &PixelRegion, value: f64) {
        for r in region.rows() {
            let base = r * self.width;
            self.values[base + region.col_start..base + region.col_end].fill(value);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Relative center of mass `(x, y)` of the cell values; the image center
    /// when the total is not positive.
    pub fn center_of_mass(&self) -> (f64, f64) {
        let mut total = 0.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for r in 0..self.height {
            let y = (r as f64 + 0.5) / self.height as f64;
            for c in 0..self.width {
                let v = self.values[r * self.width + c];
                total += v;
                sx += v * (c as f64 + 0.5) / self.width as f64;
                sy += v * y;
            }
        }
        if total > 0.0 {
            (sx / total, sy / total)
        } else {
            (0.5, 0.5)
        }
    }

    pub fn full_region(&self) -> PixelRegion {
        PixelRegion {
            row_start: 0,
            row_end: self.height,
            col_start: 0,
            col_end: self.width,
        }
    }
}

/// Half-open cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelRegion {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl PixelRegion {
    pub fn new(row_start: usize, row_end: usize, col_start: usize, col_end: usize) -> Result<Self> {
        if row_start >= row_end || col_start >= col_end {
            return Err(Error::InvalidValue(format!(
                "empty region rows [{row_start},{row_end}) cols [{col_start},{col_end})"
            )));
        }
        Ok(PixelRegion {
            row_start,
            row_end,
            col_start,
            col_end,
        })
    }

    pub fn width(&self) -> usize {
        self.col_end - self.col_start
    }

    pub fn height(&self) -> usize {
        self.row_end - self.row_start
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn rows(&self) -> std::ops::Range<usize> {
        self.row_start..self.row_end
    }

    pub fn cols(&self) -> std::ops::Range<usize> {
        self.col_start..self.col_end
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.rows().contains(&row) && self.cols().contains(&col)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.row_end <= height && self.col_end <= width && self.row_start < self.row_end && self.col_start < self.col_end
    }

    /// The region as a relative box on a `width × height` lattice.
    pub fn to_rel_box(&self, width: usize, height: usize) -> RelBox {
        RelBox::from_extent(
            self.col_start as f64 / width as f64,
            self.col_end as f64 / width as f64,
            self.row_start as f64 / height as f64,
            self.row_end as f64 / height as f64,
        )
    }
}

impl fmt::Display for PixelRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rows [{}, {}) cols [{}, {})",
            self.row_start, self.row_end, self.col_start, self.col_end
        )
    }
}

// Snap products that are integers up to rounding noise (0.75 * 16 etc.).
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Converts a relative box to cell bounds on a `width × height` map.
pub fn to_pixel_region(b: &RelBox, width: usize, height: usize) -> PixelRegion {
    assert!(width >= 1 && height >= 1);
    let bounds = |center: f64, extent: f64, cells: usize| {
        let n = cells as f64;
        let start = snap((center - extent / 2.0) * n).floor().clamp(0.0, n - 1.0) as usize;
        let end = snap((center + extent / 2.0) * n).ceil().clamp(1.0, n) as usize;
        (start, end.max(start + 1))
    };
    let (col_start, col_end) = bounds(b.cx, b.w, width);
    let (row_start, row_end) = bounds(b.cy, b.h, height);
    PixelRegion {
        row_start,
        row_end,
        col_start,
        col_end,
    }
}

/// Per-token grids of one cross-attention layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnMap {
    kind: MapKind,
    width: usize,
    height: usize,
    grids: Vec<Grid>,
}

impl AttnMap {
    pub fn new(kind: MapKind, grids: Vec<Grid>) -> Result<Self> {
        let first = grids
            .first()
            .ok_or_else(|| Error::ShapeMismatch("attention map needs at least one token".into()))?;
        let (width, height) = (first.width, first.height);
        if grids.iter().any(|g| g.width != width || g.height != height) {
            return Err(Error::ShapeMismatch("token grids differ in resolution".into()));
        }
        if kind == MapKind::Probs {
            if let Some(v) = grids
                .iter()
                .flat_map(|g| g.values.iter())
                .find(|v| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::InvalidValue(format!("probability {v} outside [0, 1]")));
            }
        }
        Ok(AttnMap {
            kind,
            width,
            height,
            grids,
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_tokens(&self) -> usize {
        self.grids.len()
    }

    pub fn token(&self, k: usize) -> &Grid {
        &self.grids[k]
    }

    pub fn grids(&self) -> &[Grid] {
        &self.grids
    }

    /// Mutable access to the token grids. Only meaningful for logits; probs
    /// maps would lose their range guarantee.
    pub(crate) fn grids_mut(&mut self) -> &mut [Grid] {
        &mut self.grids
    }

    pub fn into_grids(self) -> Vec<Grid> {
        self.grids
    }
}

/// All cross-attention layers of one denoising step.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnStack {
    pub step: usize,
    layers: Vec<AttnMap>,
}

impl AttnStack {
    pub fn new(step: usize, layers: Vec<AttnMap>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::ShapeMismatch("attention stack needs at least one layer".into()))?;
        if layers.iter().any(|l| l.n_tokens() != first.n_tokens()) {
            return Err(Error::ShapeMismatch("layers differ in token count".into()));
        }
        if layers.iter().any(|l| l.kind != first.kind) {
            return Err(Error::ShapeMismatch("layers mix logits and probs".into()));
        }
        Ok(AttnStack { step, layers })
    }

    pub fn kind(&self) -> MapKind {
        self.layers[0].kind
    }

    pub fn n_tokens(&self) -> usize {
        self.layers[0].n_tokens()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[AttnMap] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [AttnMap] {
        &mut self.layers
    }

    pub fn layer(&self, l: usize) -> &AttnMap {
        &self.layers[l]
    }

    pub fn resolutions(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.width, l.height)).collect()
    }

    /// Per-position softmax across tokens, layer by layer.
    pub fn softmax_tokens(&self) -> Result<AttnStack> {
        if self.kind() != MapKind::Logits {
            return Err(Error::KindMismatch {
                expected: "logits",
                found: "probs",
            });
        }
        let layers = self
            .layers
            .iter()
            .map(softmax_across_tokens)
            .collect::<Result<Vec<_>>>()?;
        AttnStack::new(self.step, layers)
    }
}

fn softmax_across_tokens(map: &AttnMap) -> Result<AttnMap> {
    let n = map.n_tokens();
    let cells = map.width * map.height;
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(cells); n];
    let mut buf = vec![0.0; n];
    for i in 0..cells {
        let mut max = f64::NEG_INFINITY;
        for (k, g) in map.grids.iter().enumerate() {
            buf[k] = g.values[i];
            max = max.max(buf[k]);
        }
        let mut total = 0.0;
        for v in buf.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for (k, v) in buf.iter().enumerate() {
            out[k].push(v / total);
        }
    }
    let grids = out
        .into_iter()
        .map(|values| Grid::new(map.width, map.height, values))
        .collect::<Result<Vec<_>>>()?;
    AttnMap::new(MapKind::Probs, grids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_box_on_16() {
        let b = RelBox::new(0.5, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(to_pixel_region(&b, 16, 16), PixelRegion::new(4, 12, 4, 12).unwrap());
    }

    #[test]
    fn left_band_on_64() {
        // (0.2 - 0.165) * 64 = 2.24 -> 2, (0.2 + 0.165) * 64 = 23.36 -> 24
        let b = RelBox::new(0.20, 0.50, 0.33, 1.00).unwrap();
        assert_eq!(to_pixel_region(&b, 64, 64), PixelRegion::new(0, 64, 2, 24).unwrap());
    }

    #[test]
    fn full_box_is_whole_grid() {
        let b = RelBox::new(0.5, 0.5, 1.0, 1.0).unwrap();
        for n in [1, 3, 8, 64] {
            assert_eq!(to_pixel_region(&b, n, n), PixelRegion::new(0, n, 0, n).unwrap());
        }
    }

    #[test]
    fn degenerate_positions_stay_non_empty() {
        let b = RelBox { cx: 1.0, cy: 0.0, w: 0.01, h: 0.01 };
        let r = to_pixel_region(&b, 8, 8);
        assert!(r.area() >= 1 && r.fits(8, 8));
    }

    #[test]
    fn grid_rejects_non_finite() {
        assert!(Grid::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(Grid::new(2, 1, vec![0.0, f64::INFINITY]).is_err());
        assert!(Grid::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn probs_must_be_in_range() {
        assert!(AttnMap::new(MapKind::Probs, vec![Grid::filled(2, 2, 1.5)]).is_err());
        assert!(AttnMap::new(MapKind::Logits, vec![Grid::filled(2, 2, 1.5)]).is_ok());
    }

    #[test]
    fn stack_requires_shared_token_count() {
        let a = AttnMap::new(MapKind::Logits, vec![Grid::filled(2, 2, 0.0)]).unwrap();
        let b = AttnMap::new(MapKind::Logits, vec![Grid::filled(2, 2, 0.0); 2]).unwrap();
        assert!(AttnStack::new(1, vec![a, b]).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let grids = vec![
            Grid::new(2, 1, vec![1.0, -3.0]).unwrap(),
            Grid::new(2, 1, vec![0.5, 2.0]).unwrap(),
            Grid::new(2, 1, vec![-1.0, 700.0]).unwrap(),
        ];
        let stack = AttnStack::new(3, vec![AttnMap::new(MapKind::Logits, grids).unwrap()]).unwrap();
        let probs = stack.softmax_tokens().unwrap();
        for i in 0..2 {
            let s: f64 = probs.layer(0).grids().iter().map(|g| g.values()[i]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn center_of_mass_of_small_map() {
        // cell centers at 1/6, 1/2, 5/6
        let g = Grid::new(3, 3, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let (x, y) = g.center_of_mass();
        assert!((x - 5.0 / 6.0).abs() < 1e-12);
        assert!((y - 0.5).abs() < 1e-12);
    }
}
