use serde::Serialize;

use super::map::{to_pixel_region, AttnMap, Grid, MapKind, PixelRegion};
use crate::error::{Error, Result};
use crate::layout::ParsedLayout;

/// Default inside-fraction threshold below which an object is misplaced.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Aligned,
    Misplaced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectCheck {
    pub object: usize,
    pub token: usize,
    pub region: PixelRegion,
    pub inside_fraction: f64,
    pub verdict: Verdict,
}

/// Share of the grid's mass that falls inside `region`; zero for a map
/// without mass.
pub fn inside_fraction(grid: &Grid, region: &PixelRegion) -> f64 {
    let total = grid.sum();
    if total <= 0.0 {
        return 0.0;
    }
    grid.region_sum(region) / total
}

pub fn check_discrepancy(merged: &AttnMap, layout: &ParsedLayout, threshold: f64) -> Result<Vec<ObjectCheck>> {
    if merged.kind() != MapKind::Probs {
        return Err(Error::KindMismatch {
            expected: "probs",
            found: "logits",
        });
    }
    layout
        .targets()
        .enumerate()
        .map(|(object, (token, target))| {
            if token >= merged.n_tokens() {
                return Err(Error::ShapeMismatch(format!(
                    "object token {token} outside a {}-token map",
                    merged.n_tokens()
                )));
            }
            let region = to_pixel_region(&target, merged.width(), merged.height());
            let inside_fraction = inside_fraction(merged.token(token), &region);
            let verdict = if inside_fraction < threshold {
                Verdict::Misplaced
            } else {
                Verdict::Aligned
            };
            Ok(ObjectCheck {
                object,
                token,
                region,
                inside_fraction,
                verdict,
            })
        })
        .collect()
}
