use serde::Serialize;

use crate::attention::{locate_region, to_pixel_region, AttnMap, ObjectCheck, PixelRegion, Verdict};
use crate::error::{Error, Result};
use crate::layout::{ParsedLayout, RelBox};

/// Source and target regions of one object on one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerRegions {
    pub width: usize,
    pub height: usize,
    pub source: PixelRegion,
    pub target: PixelRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEntry {
    pub object: usize,
    pub token: usize,
    pub target_box: RelBox,
    /// Located region on the merged map.
    pub source: PixelRegion,
    /// Target region on the merged map.
    pub target: PixelRegion,
    /// One entry per layer, in layer order.
    pub layers: Vec<LayerRegions>,
}

/// Per-object transfers for all misplaced objects, in prompt-token order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectificationPlan {
    pub merged_width: usize,
    pub merged_height: usize,
    pub entries: Vec<PlanEntry>,
}

impl RectificationPlan {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_layers(&self) -> Option<usize> {
        self.entries.first().map(|e| e.layers.len())
    }
}

fn scale_start(start: usize, from: usize, to: usize, size: usize) -> usize {
    let scaled = (start as f64 * to as f64 / from as f64).round() as usize;
    scaled.min(to - size)
}

fn layer_regions(source: &PixelRegion, target_box: &RelBox, merged: (usize, usize), layer: (usize, usize)) -> LayerRegions {
    let (w, h) = layer;
    let target = to_pixel_region(target_box, w, h);
    let col = scale_start(source.col_start, merged.0, w, target.width());
    let row = scale_start(source.row_start, merged.1, h, target.height());
    let source = PixelRegion::new(row, row + target.height(), col, col + target.width())
        .expect("scaled window stays inside the layer");
    LayerRegions {
        width: w,
        height: h,
        source,
        target,
    }
}

/// Locates each misplaced object on the temporally merged map and maps the
/// located window and its target onto every layer resolution.
///
/// The window has the size of the object's target region on the merged map.
/// On other layers the window keeps the target's size there and its corner
/// is scaled proportionally.
pub fn build_plan(
    merged: &AttnMap,
    layout: &ParsedLayout,
    checks: &[ObjectCheck],
    resolutions: &[(usize, usize)],
) -> Result<RectificationPlan> {
    let dims = (merged.width(), merged.height());
    let mut misplaced: Vec<&ObjectCheck> = checks.iter().filter(|c| c.verdict == Verdict::Misplaced).collect();
    misplaced.sort_by_key(|c| c.token);
    let mut entries = Vec::with_capacity(misplaced.len());
    for check in misplaced {
        if check.token >= merged.n_tokens() {
            return Err(Error::ShapeMismatch(format!(
                "object token {} outside a {}-token map",
                check.token,
                merged.n_tokens()
            )));
        }
        let target_box = layout.box_of(check.object);
        let target = to_pixel_region(&target_box, dims.0, dims.1);
        let source = locate_region(merged.token(check.token), (target.width(), target.height()))?;
        let layers = resolutions
            .iter()
            .map(|&res| layer_regions(&source, &target_box, dims, res))
            .collect();
        entries.push(PlanEntry {
            object: check.object,
            token: check.token,
            target_box,
            source,
            target,
            layers,
        });
    }
    Ok(RectificationPlan {
        merged_width: dims.0,
        merged_height: dims.1,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_corner_and_clamps() {
        let src = PixelRegion::new(4, 10, 40, 61).unwrap();
        let b = RelBox::new(0.2, 0.5, 0.33, 1.0).unwrap();
        let l = layer_regions(&src, &b, (64, 64), (32, 32));
        assert_eq!(l.target.width(), l.source.width());
        assert_eq!(l.target.height(), l.source.height());
        assert_eq!(l.source.col_start, 20);
        // full-height window pinned to the top row
        assert_eq!(l.source.row_start, 0);
        assert!(l.source.fits(32, 32));
        let same = layer_regions(&PixelRegion::new(0, 64, 40, 61).unwrap(), &b, (64, 64), (64, 64));
        assert_eq!((same.source.col_start, same.source.row_start), (40, 0));
        assert_eq!(same.source.width(), same.target.width());
    }
}
