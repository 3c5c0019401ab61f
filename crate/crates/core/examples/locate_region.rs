//! Sliding-window localization on a small map.

use layoutcal::attention::{locate_region, Grid, SummedAreaTable};

fn main() -> layoutcal::Result<()> {
    // two bumps; the right one carries more mass
    let grid = Grid::from_fn(12, 8, |r, c| {
        let bump = |cr: f64, cc: f64, a: f64| a * (-((r as f64 - cr).powi(2) + (c as f64 - cc).powi(2)) / 4.0).exp();
        bump(3.0, 2.0, 1.0) + bump(5.0, 9.0, 1.5)
    })?;
    let sat = SummedAreaTable::new(&grid);
    for window in [(3, 3), (4, 2), (12, 1)] {
        let region = locate_region(&grid, window)?;
        println!("window {window:?} -> {region} sum={:.4}", sat.region_sum(&region));
    }
    Ok(())
}
