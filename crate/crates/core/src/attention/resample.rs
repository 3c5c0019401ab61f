//! Bilinear resampling with half-pixel centers and edge clamping.

use super::map::Grid;

fn axis_weights(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

pub fn bilinear(grid: &Grid, width: usize, height: usize) -> Grid {
    if grid.width() == width && grid.height() == height {
        return grid.clone();
    }
    let xs = axis_weights(grid.width(), width);
    let ys = axis_weights(grid.height(), height);
    let mut values = Vec::with_capacity(width * height);
    for &(r0, r1, fy) in &ys {
        for &(c0, c1, fx) in &xs {
            let top = grid.get(r0, c0) * (1.0 - fx) + grid.get(r0, c1) * fx;
            let bottom = grid.get(r1, c0) * (1.0 - fx) + grid.get(r1, c1) * fx;
            values.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Grid::new(width, height, values).expect("interpolation of finite values is finite")
}
