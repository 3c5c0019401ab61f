use serde::Serialize;

use crate::attention::{layered_merge_token, AttnStack};
use crate::error::Result;
use crate::layout::{ParsedLayout, RelBox};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectOutcome {
    pub object: usize,
    pub token: usize,
    pub center: [f64; 2],
    pub target: RelBox,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub objects: Vec<ObjectOutcome>,
    pub successes: usize,
    pub accuracy: f64,
}

impl SimResult {
    pub fn all_correct(&self) -> bool {
        self.successes == self.objects.len()
    }
}

/// An object succeeds when the center of mass of its merged map lies in
/// its target box.
pub fn evaluate_layout(final_probs: &AttnStack, layout: &ParsedLayout) -> Result<SimResult> {
    let objects = layout
        .targets()
        .enumerate()
        .map(|(object, (token, target))| {
            let (x, y) = layered_merge_token(final_probs, token)?.center_of_mass();
            Ok(ObjectOutcome {
                object,
                token,
                center: [x, y],
                target,
                success: target.contains(x, y),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = objects.iter().filter(|o| o.success).count();
    let accuracy = if objects.is_empty() {
        1.0
    } else {
        successes as f64 / objects.len() as f64
    };
    Ok(SimResult {
        objects,
        successes,
        accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{AttnMap, Grid, MapKind};
    use crate::layout::{parse_layout, LayoutConfig, RelationVocabulary};

    fn stack_with(token: usize, n: usize, grid: Grid) -> AttnStack {
        let grids = (0..n)
            .map(|k| if k == token { grid.clone() } else { Grid::filled(grid.width(), grid.height(), 0.0) })
            .collect();
        AttnStack::new(1, vec![AttnMap::new(MapKind::Probs, grids).unwrap()]).unwrap()
    }

    #[test]
    fn center_of_mass_by_hand() {
        // mass 1 at (0,0), 2 at (1,2), 1 at (2,1); centers at 1/6, 1/2, 5/6
        let mut g = Grid::filled(3, 3, 0.0);
        g.set(0, 0, 1.0);
        g.set(1, 2, 2.0);
        g.set(2, 1, 1.0);
        let (x, y) = g.center_of_mass();
        assert!((x - (1.0 / 6.0 + 2.0 * 5.0 / 6.0 + 0.5) / 4.0).abs() < 1e-12);
        assert!((y - (1.0 / 6.0 + 2.0 * 0.5 + 5.0 / 6.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn inside_and_outside() {
        let layout = parse_layout("a dog on the left", &RelationVocabulary::default(), &LayoutConfig::default()).unwrap();
        let blob = |col: usize| Grid::from_fn(8, 8, |_, c| if c == col { 1.0 } else { 0.0 }).unwrap();
        let hit = evaluate_layout(&stack_with(1, 6, blob(1)), &layout).unwrap();
        assert!(hit.all_correct() && hit.accuracy == 1.0);
        let miss = evaluate_layout(&stack_with(1, 6, blob(6)), &layout).unwrap();
        assert_eq!((miss.successes, miss.accuracy), (0, 0.0));
    }
}
