use std::collections::BTreeSet;

use super::ops::{apply_mask, intra_adjust, transfer_activation};
use super::plan::RectificationPlan;
use crate::attention::{AttnStack, MapKind};
use crate::error::{Error, Result};

/// Applies the plan to every non-skipped layer of a logits stack.
///
/// Each misplaced object, in token order, has its map moved to the target,
/// boosted there, and then suppresses every other token's map.
pub fn rectify_stack(
    stack: &AttnStack,
    plan: &RectificationPlan,
    alpha: f64,
    skip_layers: &BTreeSet<usize>,
) -> Result<AttnStack> {
    if stack.kind() != MapKind::Logits {
        return Err(Error::KindMismatch {
            expected: "logits",
            found: "probs",
        });
    }
    let resolutions = stack.resolutions();
    for entry in &plan.entries {
        if entry.layers.len() != resolutions.len() {
            return Err(Error::PlanStackMismatch(format!(
                "plan covers {} layers, stack has {}",
                entry.layers.len(),
                resolutions.len()
            )));
        }
        if entry.token >= stack.n_tokens() {
            return Err(Error::PlanStackMismatch(format!(
                "plan token {} outside a {}-token stack",
                entry.token,
                stack.n_tokens()
            )));
        }
        for (l, (regions, &(w, h))) in entry.layers.iter().zip(&resolutions).enumerate() {
            if (regions.width, regions.height) != (w, h) {
                return Err(Error::PlanStackMismatch(format!(
                    "layer {} is {w}x{h}, plan expects {}x{}",
                    l + 1,
                    regions.width,
                    regions.height
                )));
            }
        }
    }
    let mut out = stack.clone();
    for (l, layer) in out.layers_mut().iter_mut().enumerate() {
        if skip_layers.contains(&(l + 1)) {
            continue;
        }
        let grids = layer.grids_mut();
        for entry in &plan.entries {
            let regions = &entry.layers[l];
            let k = entry.token;
            let moved = transfer_activation(&grids[k], &regions.source, &regions.target)?;
            grids[k] = intra_adjust(&moved, &regions.target, alpha)?;
            apply_mask(grids, k);
        }
    }
    Ok(out)
}
