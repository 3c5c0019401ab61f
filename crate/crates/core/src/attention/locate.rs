//! Most-salient window search over a summed-area table.

use super::map::{Grid, PixelRegion};
use crate::error::{Error, Result};

/// Inclusive prefix sums with a zero border row and column.
pub struct SummedAreaTable {
    width: usize,
    sums: Vec<f64>,
}

impl SummedAreaTable {
    pub fn new(grid: &Grid) -> Self {
        let (w, h) = (grid.width(), grid.height());
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for r in 0..h {
            let mut row = 0.0;
            for c in 0..w {
                row += grid.get(r, c);
                sums[(r + 1) * stride + c + 1] = sums[r * stride + c + 1] + row;
            }
        }
        SummedAreaTable { width: w, sums }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.sums[r * (self.width + 1) + c]
    }

    pub fn region_sum(&self, region: &PixelRegion) -> f64 {
        self.at(region.row_end, region.col_end) - self.at(region.row_start, region.col_end)
            - self.at(region.row_end, region.col_start)
            + self.at(region.row_start, region.col_start)
    }
}

/// Two window sums closer than this are treated as a tie. Scaled by the
/// map's absolute mass so prefix-sum rounding cannot reorder equal windows.
pub fn tie_tolerance(grid: &Grid) -> f64 {
    let mass: f64 = grid.values().iter().map(|v| v.abs()).sum();
    1e-12 * mass.max(f64::MIN_POSITIVE)
}

pub(crate) fn check_window(grid: &Grid, window: (usize, usize)) -> Result<()> {
    let (w, h) = window;
    if w == 0 || h == 0 || w > grid.width() || h > grid.height() {
        return Err(Error::WindowTooLarge {
            window_w: w,
            window_h: h,
            map_w: grid.width(),
            map_h: grid.height(),
        });
    }
    Ok(())
}

/// Window of size `(width, height)` cells with the largest sum, stride 1.
/// Ties go to the smallest `(row_start, col_start)`.
pub fn locate_region(grid: &Grid, window: (usize, usize)) -> Result<PixelRegion> {
    check_window(grid, window)?;
    let (w, h) = window;
    let sat = SummedAreaTable::new(grid);
    let tol = tie_tolerance(grid);
    let mut best = PixelRegion {
        row_start: 0,
        row_end: h,
        col_start: 0,
        col_end: w,
    };
    let mut best_sum = sat.region_sum(&best);
    for r in 0..=grid.height() - h {
        for c in 0..=grid.width() - w {
            let cand = PixelRegion {
                row_start: r,
                row_end: r + h,
                col_start: c,
                col_end: c + w,
            };
            let s = sat.region_sum(&cand);
            if s > best_sum + tol {
                best = cand;
                best_sum = s;
            }
        }
    }
    Ok(best)
}
