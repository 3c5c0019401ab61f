//! Heuristic target-box allocation.
//!
//! Superlative objects take their table boxes first (duplicates split the
//! shared box evenly along its long axis). Edge superlatives then claim their
//! band, leaving a free rectangle. The remaining objects are grouped into
//! connected components of the semantic tree; components share the free
//! rectangle in equal vertical strips, and inside a component every object
//! gets a column (row) slot given by its longest-path rank along the x (y)
//! ordering constraints. Constraints against anchored objects narrow the
//! component region. Slots are shrunk by the margin factor, and between
//! subjects are finally re-centered on their anchors' midpoint.

use std::collections::BTreeMap;

use serde::Serialize;

use super::boxes::{RelBox, SuperlativeTerm};
use super::parse::{ObjectPhrase, RelationSet};
use super::tree::{build_semantic_tree, Axis, AxisConstraint, SemanticTree};
use crate::error::{Error, Result};

pub const DEFAULT_MARGIN: f64 = 0.9;
pub const DEFAULT_MIN_BOX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayoutConfig {
    /// Fraction of a slot kept on each axis.
    pub margin: f64,
    /// Smallest admissible box side.
    pub min_box: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            margin: DEFAULT_MARGIN,
            min_box: DEFAULT_MIN_BOX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsedLayout {
    pub prompt: String,
    /// Number of prompt tokens.
    pub num_tokens: usize,
    pub objects: Vec<ObjectPhrase>,
    pub relations: RelationSet,
    /// One box per object, same order as `objects`.
    pub boxes: Vec<RelBox>,
}

impl ParsedLayout {
    pub fn box_of(&self, object: usize) -> RelBox {
        self.boxes[object]
    }

    /// (token index, box) per object.
    pub fn targets(&self) -> impl Iterator<Item = (usize, RelBox)> + '_ {
        self.objects
            .iter()
            .zip(&self.boxes)
            .map(|(o, b)| (o.head_token_index, *b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    const UNIT: Rect = Rect {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };

    fn span(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => (self.x0, self.x1),
            Axis::Y => (self.y0, self.y1),
        }
    }

    fn set_span(&mut self, axis: Axis, (lo, hi): (f64, f64)) {
        match axis {
            Axis::X => {
                self.x0 = lo;
                self.x1 = hi;
            }
            Axis::Y => {
                self.y0 = lo;
                self.y1 = hi;
            }
        }
    }

    fn to_box(self) -> RelBox {
        RelBox::from_extent(self.x0, self.x1, self.y0, self.y1)
    }
}

fn split_duplicates(term: SuperlativeTerm, count: usize, min_box: f64) -> Result<Vec<RelBox>> {
    let base = term.target_box();
    if count == 1 {
        return Ok(vec![base]);
    }
    let n = count as f64;
    let pieces: Vec<RelBox> = (0..count)
        .map(|i| {
            let i = i as f64;
            if base.h > base.w {
                let h = base.h / n;
                RelBox {
                    cy: base.y0() + (i + 0.5) * h,
                    h,
                    ..base
                }
            } else {
                let w = base.w / n;
                RelBox {
                    cx: base.x0() + (i + 0.5) * w,
                    w,
                    ..base
                }
            }
        })
        .collect();
    if pieces[0].w < min_box || pieces[0].h < min_box {
        return Err(Error::AllocationOverflow(format!(
            "{count} objects cannot share the `{term}` box at minimum size {min_box}"
        )));
    }
    Ok(pieces)
}

fn free_region(boxes: &[(SuperlativeTerm, RelBox)]) -> Rect {
    let mut free = Rect::UNIT;
    for (term, b) in boxes {
        match term {
            SuperlativeTerm::Left => free.x0 = free.x0.max(b.x1()),
            SuperlativeTerm::Right => free.x1 = free.x1.min(b.x0()),
            SuperlativeTerm::Above => free.y0 = free.y0.max(b.y1()),
            SuperlativeTerm::Below => free.y1 = free.y1.min(b.y0()),
            _ => {}
        }
    }
    free
}

/// Connected components of the unanchored objects, ordered by their
/// smallest member.
fn components(free_objects: &[usize], constraints: &[AxisConstraint]) -> Vec<Vec<usize>> {
    let mut label: BTreeMap<usize, usize> = free_objects.iter().map(|&o| (o, o)).collect();
    fn find(label: &mut BTreeMap<usize, usize>, x: usize) -> usize {
        let p = label[&x];
        if p == x {
            return x;
        }
        let r = find(label, p);
        label.insert(x, r);
        r
    }
    for c in constraints {
        if label.contains_key(&c.before) && label.contains_key(&c.after) {
            let a = find(&mut label, c.before);
            let b = find(&mut label, c.after);
            let (lo, hi) = (a.min(b), a.max(b));
            label.insert(hi, lo);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &o in free_objects {
        let root = find(&mut label, o);
        groups.entry(root).or_default().push(o);
    }
    groups.into_values().collect()
}

/// Longest-path rank along `axis` for members touched by an internal
/// constraint.
fn ranks(members: &[usize], constraints: &[AxisConstraint], axis: Axis) -> BTreeMap<usize, usize> {
    let internal: Vec<&AxisConstraint> = constraints
        .iter()
        .filter(|c| c.axis == axis && members.contains(&c.before) && members.contains(&c.after))
        .collect();
    let mut rank: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &internal {
        rank.insert(c.before, 0);
        rank.insert(c.after, 0);
    }
    // The constraint graph is acyclic, so |members| relaxation rounds suffice.
    for _ in 0..members.len() {
        let mut changed = false;
        for c in &internal {
            let want = rank[&c.before] + 1;
            if rank[&c.after] < want {
                rank.insert(c.after, want);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    rank
}

/// Narrows `region` so that members constrained against anchored boxes stay
/// on the correct side. Returns `None` when nothing admissible is left.
fn clip_against_anchors(
    mut region: Rect,
    members: &[usize],
    tree: &SemanticTree,
    anchored_boxes: &BTreeMap<usize, RelBox>,
    min_slot: f64,
) -> Option<Rect> {
    for c in &tree.constraints {
        let (lo, hi) = region.span(c.axis);
        let near_far = |b: &RelBox| match c.axis {
            Axis::X => (b.x0(), b.cx, b.x1()),
            Axis::Y => (b.y0(), b.cy, b.y1()),
        };
        let span = if members.contains(&c.before) {
            let Some(b) = anchored_boxes.get(&c.after) else { continue };
            let (edge, center, _) = near_far(b);
            if edge - lo >= min_slot {
                (lo, hi.min(edge))
            } else {
                (lo, hi.min(center))
            }
        } else if members.contains(&c.after) {
            let Some(b) = anchored_boxes.get(&c.before) else { continue };
            let (_, center, edge) = near_far(b);
            if hi - edge >= min_slot {
                (lo.max(edge), hi)
            } else {
                (lo.max(center), hi)
            }
        } else {
            continue;
        };
        if span.1 - span.0 <= 0.0 {
            return None;
        }
        region.set_span(c.axis, span);
    }
    Some(region)
}

fn slot(region: Rect, rank: Option<&usize>, columns: usize, axis: Axis) -> (f64, f64) {
    let (lo, hi) = region.span(axis);
    match rank {
        Some(&r) => {
            let step = (hi - lo) / columns as f64;
            (lo + r as f64 * step, lo + (r as f64 + 1.0) * step)
        }
        None => (lo, hi),
    }
}

/// Assigns a target box to every object.
pub fn allocate_layout(
    prompt: &str,
    num_tokens: usize,
    objects: &[ObjectPhrase],
    relations: &RelationSet,
    cfg: &LayoutConfig,
) -> Result<ParsedLayout> {
    relations.validate(objects.len())?;
    let tree = build_semantic_tree(relations, objects)?;
    let min_slot = cfg.min_box / cfg.margin;

    // 1. superlative boxes, duplicates split in order of appearance
    let mut by_term: BTreeMap<SuperlativeTerm, Vec<usize>> = BTreeMap::new();
    for s in &relations.superlatives {
        by_term.entry(s.term).or_default().push(s.object);
    }
    let mut boxes: Vec<Option<RelBox>> = vec![None; objects.len()];
    let mut claimed = Vec::new();
    for (term, members) in &by_term {
        let pieces = split_duplicates(*term, members.len(), cfg.min_box)?;
        for (&o, b) in members.iter().zip(pieces) {
            boxes[o] = Some(b);
        }
        claimed.push((*term, term.target_box()));
    }
    let anchored_boxes: BTreeMap<usize, RelBox> = boxes
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.map(|b| (i, b)))
        .collect();

    // 2. free region left by edge bands
    let free = free_region(&claimed);

    // 3. components share the free region in equal strips
    let free_objects: Vec<usize> = (0..objects.len()).filter(|i| boxes[*i].is_none()).collect();
    let groups = components(&free_objects, &tree.constraints);
    let strip = (free.x1 - free.x0) / groups.len().max(1) as f64;
    for (gi, members) in groups.iter().enumerate() {
        let share = Rect {
            x0: free.x0 + gi as f64 * strip,
            x1: free.x0 + (gi as f64 + 1.0) * strip,
            ..free
        };
        let region = clip_against_anchors(share, members, &tree, &anchored_boxes, min_slot)
            .filter(|r| r.x1 - r.x0 >= min_slot && r.y1 - r.y0 >= min_slot)
            .or_else(|| clip_against_anchors(free, members, &tree, &anchored_boxes, min_slot))
            .ok_or_else(|| {
                Error::AllocationOverflow(format!(
                    "no admissible space left for `{}`",
                    objects[members[0]].phrase
                ))
            })?;

        // 4. rank slots inside the component, shrunk by the margin
        let xr = ranks(members, &tree.constraints, Axis::X);
        let yr = ranks(members, &tree.constraints, Axis::Y);
        let xcols = xr.values().max().map_or(1, |m| m + 1);
        let ycols = yr.values().max().map_or(1, |m| m + 1);
        for &o in members {
            let (x0, x1) = slot(region, xr.get(&o), xcols, Axis::X);
            let (y0, y1) = slot(region, yr.get(&o), ycols, Axis::Y);
            let b = Rect { x0, x1, y0, y1 }.to_box().shrink(cfg.margin);
            if b.w + 1e-12 < cfg.min_box || b.h + 1e-12 < cfg.min_box {
                return Err(Error::AllocationOverflow(format!(
                    "`{}` would get a {:.3}x{:.3} box, below the {} minimum",
                    objects[o].phrase, b.w, b.h, cfg.min_box
                )));
            }
            boxes[o] = Some(b);
        }
    }

    // 5. between subjects sit on their anchors' midpoint
    for between in &relations.betweens {
        if anchored_boxes.contains_key(&between.subject) {
            continue;
        }
        let (a1, a2) = between.anchors;
        let (Some(b1), Some(b2)) = (boxes[a1], boxes[a2]) else { continue };
        let s = boxes[between.subject].as_mut().expect("every free object was allocated");
        let half_w = s.w / 2.0;
        let half_h = s.h / 2.0;
        s.cx = ((b1.cx + b2.cx) / 2.0).clamp(half_w.min(0.5), (1.0 - half_w).max(0.5));
        s.cy = ((b1.cy + b2.cy) / 2.0).clamp(half_h.min(0.5), (1.0 - half_h).max(0.5));
    }

    let boxes: Vec<RelBox> = boxes
        .into_iter()
        .map(|b| b.expect("every object was allocated"))
        .collect();
    for b in &boxes {
        b.validate()?;
    }
    Ok(ParsedLayout {
        prompt: prompt.to_string(),
        num_tokens,
        objects: objects.to_vec(),
        relations: relations.clone(),
        boxes,
    })
}
