use super::map::{AttnMap, AttnStack, Grid, MapKind};
use super::resample::bilinear;
use crate::error::{Error, Result};

fn require_probs(stack: &AttnStack) -> Result<()> {
    if stack.kind() != MapKind::Probs {
        return Err(Error::KindMismatch {
            expected: "probs",
            found: "logits",
        });
    }
    Ok(())
}

fn merge_token(stack: &AttnStack, k: usize) -> Result<Grid> {
    let (width, height) = (stack.layer(0).width(), stack.layer(0).height());
    let weight = 1.0 / stack.n_layers() as f64;
    let mut acc = vec![0.0; width * height];
    for layer in stack.layers() {
        let up = bilinear(layer.token(k), width, height);
        for (a, v) in acc.iter_mut().zip(up.values()) {
            *a += v;
        }
    }
    let values = acc.into_iter().map(|v| (v * weight).clamp(0.0, 1.0)).collect();
    Grid::new(width, height, values)
}

/// Upsamples every layer to the first layer's resolution and averages them
/// with equal weight, token by token.
pub fn layered_merge(stack: &AttnStack) -> Result<AttnMap> {
    require_probs(stack)?;
    let grids = (0..stack.n_tokens())
        .map(|k| merge_token(stack, k))
        .collect::<Result<Vec<_>>>()?;
    AttnMap::new(MapKind::Probs, grids)
}

/// [`layered_merge`] restricted to token `k`.
pub fn layered_merge_token(stack: &AttnStack, k: usize) -> Result<Grid> {
    require_probs(stack)?;
    if k >= stack.n_tokens() {
        return Err(Error::ShapeMismatch(format!(
            "token {k} outside a {}-token stack",
            stack.n_tokens()
        )));
    }
    merge_token(stack, k)
}

/// Element-wise mean of the stored per-step merged maps.
pub fn temporal_merge(maps: &[AttnMap]) -> Result<AttnMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::ShapeMismatch("temporal merge needs at least one map".into()))?;
    if maps.len() == 1 {
        return Ok(first.clone());
    }
    for m in maps {
        if m.width() != first.width() || m.height() != first.height() || m.n_tokens() != first.n_tokens() {
            return Err(Error::ShapeMismatch(format!(
                "cannot average a {}x{}x{} map with a {}x{}x{} map",
                m.width(),
                m.height(),
                m.n_tokens(),
                first.width(),
                first.height(),
                first.n_tokens()
            )));
        }
        if m.kind() != first.kind() {
            return Err(Error::KindMismatch {
                expected: first.kind().as_str(),
                found: m.kind().as_str(),
            });
        }
    }
    let count = maps.len() as f64;
    let grids = (0..first.n_tokens())
        .map(|k| {
            let mut acc = vec![0.0; first.width() * first.height()];
            for m in maps {
                for (a, v) in acc.iter_mut().zip(m.token(k).values()) {
                    *a += v;
                }
            }
            let values = acc.into_iter().map(|v| v / count).collect();
            Grid::new(first.width(), first.height(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    if first.kind() == MapKind::Probs {
        let grids = grids
            .into_iter()
            .map(|g| {
                let values = g.values().iter().map(|v| v.clamp(0.0, 1.0)).collect();
                Grid::new(g.width(), g.height(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        return AttnMap::new(MapKind::Probs, grids);
    }
    AttnMap::new(first.kind(), grids)
}
