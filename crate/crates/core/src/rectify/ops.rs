//! Map edits applied to pre-softmax attention.

use crate::attention::{bilinear, AttnMap, Grid, MapKind, PixelRegion};
use crate::error::{Error, Result};

fn check_bounds(grid: &Grid, region: &PixelRegion, what: &str) -> Result<()> {
    if region.fits(grid.width(), grid.height()) {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!(
            "{what} region {region} outside a {}x{} map",
            grid.width(),
            grid.height()
        )))
    }
}

/// Moves the activations under `src` to `dst`.
///
/// The source patch is copied out, `src` is filled with the map's minimum,
/// and the patch (bilinearly resized when `dst` differs in size) is written
/// at `dst`; the destination write wins where the regions overlap.
pub fn transfer_activation(grid: &Grid, src: &PixelRegion, dst: &PixelRegion) -> Result<Grid> {
    check_bounds(grid, src, "source")?;
    check_bounds(grid, dst, "destination")?;
    let floor = grid.min();
    let mut patch = grid.patch(src);
    if patch.width() != dst.width() || patch.height() != dst.height() {
        patch = bilinear(&patch, dst.width(), dst.height());
    }
    let mut out = grid.clone();
    out.fill_region(src, floor);
    out.paste(&patch, dst.row_start, dst.col_start);
    Ok(out)
}

/// Multiplies cells inside `target` by `alpha` and divides the rest by it.
pub fn intra_adjust(grid: &Grid, target: &PixelRegion, alpha: f64) -> Result<Grid> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
    }
    check_bounds(grid, target, "target")?;
    let mut out = grid.clone();
    out.map_cells(|r, c, v| if target.contains(r, c) { v * alpha } else { v / alpha });
    Ok(out)
}

/// `1 - softmax(grid)`, softmax taken over the grid's cells.
pub fn adjustment_mask(grid: &Grid) -> Grid {
    let max = grid.max();
    let exps: Vec<f64> = grid.values().iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let values = exps.into_iter().map(|e| 1.0 - e / total).collect();
    Grid::new(grid.width(), grid.height(), values).expect("mask values are finite")
}

pub(crate) fn apply_mask(grids: &mut [Grid], k: usize) {
    if grids.len() < 2 {
        return;
    }
    let mask = adjustment_mask(&grids[k]);
    for (g, grid) in grids.iter_mut().enumerate() {
        if g != k {
            grid.map_cells(|r, c, v| v * mask.get(r, c));
        }
    }
}

/// Masks every token map except `k` with `1 - softmax(map_k)`.
pub fn inter_adjust(layer: &AttnMap, k: usize) -> Result<AttnMap> {
    if layer.kind() != MapKind::Logits {
        return Err(Error::KindMismatch {
            expected: "logits",
            found: "probs",
        });
    }
    if k >= layer.n_tokens() {
        return Err(Error::InvalidValue(format!(
            "token {k} outside a {}-token map",
            layer.n_tokens()
        )));
    }
    let mut grids = layer.grids().to_vec();
    apply_mask(&mut grids, k);
    AttnMap::new(MapKind::Logits, grids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[f64]) -> Grid {
        Grid::new(values.len(), 1, values.to_vec()).unwrap()
    }

    fn cols(a: usize, b: usize) -> PixelRegion {
        PixelRegion::new(0, 1, a, b).unwrap()
    }

    #[test]
    fn transfer_single_cell() {
        let out = transfer_activation(&row(&[5.0, 1.0, 1.0, 1.0]), &cols(0, 1), &cols(2, 3)).unwrap();
        assert_eq!(out.values(), [1.0, 1.0, 5.0, 1.0]);
    }

    #[test]
    fn transfer_overlapping_regions() {
        let out = transfer_activation(&row(&[5.0, 4.0, 1.0, 1.0]), &cols(0, 2), &cols(1, 3)).unwrap();
        assert_eq!(out.values(), [1.0, 5.0, 4.0, 1.0]);
    }

    #[test]
    fn transfer_rejects_out_of_bounds() {
        assert!(transfer_activation(&row(&[1.0, 2.0]), &cols(0, 1), &cols(1, 3)).is_err());
    }

    #[test]
    fn intra_scales_inside_and_outside() {
        let out = intra_adjust(&row(&[0.5, 0.5]), &cols(0, 1), 10.0).unwrap();
        assert_eq!(out.values(), [5.0, 0.05]);
        let g = row(&[0.3, -2.0, 7.5]);
        assert_eq!(intra_adjust(&g, &cols(1, 2), 1.0).unwrap(), g);
        let out = intra_adjust(&row(&[0.5, 0.5]), &cols(0, 1), 0.1).unwrap();
        assert!((out.values()[0] - 0.05).abs() < 1e-15);
        assert!((out.values()[1] - 5.0).abs() < 1e-12);
        assert!(intra_adjust(&g, &cols(0, 1), -1.0).is_err());
    }

    #[test]
    fn two_cell_mask() {
        let map = AttnMap::new(MapKind::Logits, vec![row(&[2.0, 0.0]), row(&[1.0, 1.0])]).unwrap();
        let out = inter_adjust(&map, 0).unwrap();
        assert_eq!(out.token(0), map.token(0));
        let other = out.token(1).values();
        assert!((other[0] - 0.1192).abs() < 1e-4);
        assert!((other[1] - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn uniform_mask_is_one_minus_inverse_count() {
        for n in [1usize, 2, 5, 16, 64] {
            let m = adjustment_mask(&Grid::filled(n, 1, 3.7));
            assert!(m.values().iter().all(|v| *v == 1.0 - 1.0 / n as f64));
        }
    }

    #[test]
    fn single_token_is_untouched() {
        let map = AttnMap::new(MapKind::Logits, vec![row(&[2.0, 0.0])]).unwrap();
        assert_eq!(inter_adjust(&map, 0).unwrap(), map);
        let probs = AttnMap::new(MapKind::Probs, vec![row(&[0.2, 0.0])]).unwrap();
        assert!(inter_adjust(&probs, 0).is_err());
    }
}
