//! Transfer, intra-map and inter-map adjustment on a toy layer.

use layoutcal::attention::{AttnMap, Grid, MapKind, PixelRegion};
use layoutcal::rectify::{adjustment_mask, inter_adjust, intra_adjust, transfer_activation};

fn show(name: &str, g: &Grid) {
    println!("{name}:");
    for r in 0..g.height() {
        let row: Vec<String> = (0..g.width()).map(|c| format!("{:7.3}", g.get(r, c))).collect();
        println!("  {}", row.join(""));
    }
}

fn main() -> layoutcal::Result<()> {
    let object = Grid::new(4, 2, vec![0.0, 0.0, 3.0, 2.0, 0.0, 0.0, 2.0, 1.0])?;
    let other = Grid::filled(4, 2, 1.0);
    let src = PixelRegion::new(0, 2, 2, 4)?;
    let dst = PixelRegion::new(0, 2, 0, 2)?;

    let moved = transfer_activation(&object, &src, &dst)?;
    let adjusted = intra_adjust(&moved, &dst, 2.0)?;
    show("object", &object);
    show("after transfer", &moved);
    show("after intra adjust", &adjusted);
    show("mask", &adjustment_mask(&adjusted));

    let layer = AttnMap::new(MapKind::Logits, vec![adjusted, other])?;
    show("other token after inter adjust", inter_adjust(&layer, 0)?.token(1));
    Ok(())
}
