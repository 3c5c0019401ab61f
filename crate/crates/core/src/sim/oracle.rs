use crate::attention::{check_window, tie_tolerance, Grid, PixelRegion};
use crate::error::Result;

/// Exhaustive window search that sums every window cell by cell.
///
/// Same scan order and tie rule as the fast search; meant as a test oracle.
pub fn brute_force_locate(grid: &Grid, window: (usize, usize)) -> Result<PixelRegion> {
    check_window(grid, window)?;
    let (w, h) = window;
    let tol = tie_tolerance(grid);
    let mut best: Option<(f64, usize, usize)> = None;
    for r in 0..=grid.height() - h {
        for c in 0..=grid.width() - w {
            let mut s = 0.0;
            for rr in r..r + h {
                for cc in c..c + w {
                    s += grid.get(rr, cc);
                }
            }
            match best {
                Some((b, _, _)) if s <= b + tol => {}
                _ => best = Some((s, r, c)),
            }
        }
    }
    let (_, r, c) = best.expect("window fits at least once");
    PixelRegion::new(r, r + h, c, c + w)
}
