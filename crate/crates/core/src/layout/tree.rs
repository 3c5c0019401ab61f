//! Semantic tree over relative and between relations.
//!
//! Each relation also becomes an ordering constraint on one image axis
//! (`before` lies left of / above `after`). Constraints are inserted in parse
//! order and an insertion that would close a directed cycle on its axis is
//! rejected.

use serde::Serialize;

use super::parse::{ObjectPhrase, RelationSet, RelativeRelation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdgeLabel {
    Relative { relation: RelativeRelation },
    Between,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeEdge {
    pub subject: usize,
    pub object: usize,
    pub label: EdgeLabel,
}

/// `before` precedes `after` along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AxisConstraint {
    pub axis: Axis,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SemanticTree {
    /// Objects in order of first appearance in an edge.
    pub nodes: Vec<usize>,
    pub edges: Vec<TreeEdge>,
    /// Nodes that already hold a superlative box.
    pub anchored: Vec<usize>,
    pub constraints: Vec<AxisConstraint>,
}

impl SemanticTree {
    pub fn is_anchored(&self, node: usize) -> bool {
        self.anchored.contains(&node)
    }

    fn reaches(&self, axis: Axis, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![from];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            for c in self.constraints.iter().filter(|c| c.axis == axis && c.before == n) {
                if !seen.contains(&c.after) {
                    seen.push(c.after);
                    stack.push(c.after);
                }
            }
        }
        false
    }

    fn add_node(&mut self, n: usize) {
        if !self.nodes.contains(&n) {
            self.nodes.push(n);
        }
    }

    fn push_constraint(&mut self, c: AxisConstraint) -> bool {
        if c.before == c.after || self.reaches(c.axis, c.after, c.before) {
            return false;
        }
        self.constraints.push(c);
        true
    }
}

fn relative_constraint(subject: usize, relation: RelativeRelation, object: usize) -> AxisConstraint {
    let (axis, before, after) = match relation {
        RelativeRelation::LeftOf => (Axis::X, subject, object),
        RelativeRelation::RightOf => (Axis::X, object, subject),
        RelativeRelation::Above => (Axis::Y, subject, object),
        RelativeRelation::Below => (Axis::Y, object, subject),
    };
    AxisConstraint { axis, before, after }
}

enum Item {
    Relative(usize),
    Between(usize),
}

/// Builds the tree. `objects` is only used to name objects in errors.
pub fn build_semantic_tree(relations: &RelationSet, objects: &[ObjectPhrase]) -> Result<SemanticTree> {
    let name = |i: usize| {
        objects
            .get(i)
            .map(|o| o.phrase.clone())
            .unwrap_or_else(|| format!("#{i}"))
    };
    let mut tree = SemanticTree {
        anchored: relations.superlatives.iter().map(|s| s.object).collect(),
        ..SemanticTree::default()
    };

    // Parse order: both lists are ordered by subject position in the prompt.
    let mut items: Vec<(usize, Item)> = relations
        .relatives
        .iter()
        .enumerate()
        .map(|(i, r)| (r.subject, Item::Relative(i)))
        .chain(
            relations
                .betweens
                .iter()
                .enumerate()
                .map(|(i, b)| (b.subject, Item::Between(i))),
        )
        .collect();
    items.sort_by_key(|(subject, _)| *subject);

    for (_, item) in items {
        match item {
            Item::Relative(i) => {
                let r = relations.relatives[i];
                tree.add_node(r.subject);
                tree.add_node(r.object);
                tree.edges.push(TreeEdge {
                    subject: r.subject,
                    object: r.object,
                    label: EdgeLabel::Relative { relation: r.relation },
                });
                if !tree.push_constraint(relative_constraint(r.subject, r.relation, r.object)) {
                    return Err(Error::CycleDetected {
                        subject: name(r.subject),
                        object: name(r.object),
                        relation: r.relation.to_string(),
                    });
                }
            }
            Item::Between(i) => {
                let b = relations.betweens[i];
                let s = b.subject;
                let (a1, a2) = b.anchors;
                for n in [s, a1, a2] {
                    tree.add_node(n);
                }
                for a in [a1, a2] {
                    tree.edges.push(TreeEdge {
                        subject: s,
                        object: a,
                        label: EdgeLabel::Between,
                    });
                }
                // Orient along an axis on which the anchors are already ordered.
                let (axis, first, second) = if tree.reaches(Axis::X, a2, a1) {
                    (Axis::X, a2, a1)
                } else if tree.reaches(Axis::X, a1, a2) {
                    (Axis::X, a1, a2)
                } else if tree.reaches(Axis::Y, a2, a1) {
                    (Axis::Y, a2, a1)
                } else if tree.reaches(Axis::Y, a1, a2) {
                    (Axis::Y, a1, a2)
                } else {
                    (Axis::X, a1, a2)
                };
                for (before, after, anchor) in [(first, s, first), (s, second, second)] {
                    if !tree.push_constraint(AxisConstraint { axis, before, after }) {
                        return Err(Error::CycleDetected {
                            subject: name(s),
                            object: name(anchor),
                            relation: "between".into(),
                        });
                    }
                }
            }
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::parse::{Between, Relative};

    fn rel(subject: usize, relation: RelativeRelation, object: usize) -> Relative {
        Relative { subject, relation, object }
    }

    #[test]
    fn single_edge() {
        let set = RelationSet {
            relatives: vec![rel(0, RelativeRelation::LeftOf, 1)],
            ..Default::default()
        };
        let tree = build_semantic_tree(&set, &[]).unwrap();
        assert_eq!(tree.nodes, [0, 1]);
        assert_eq!(
            tree.edges,
            [TreeEdge {
                subject: 0,
                object: 1,
                label: EdgeLabel::Relative { relation: RelativeRelation::LeftOf }
            }]
        );
    }

    #[test]
    fn chain_keeps_parse_order() {
        let set = RelationSet {
            relatives: vec![rel(0, RelativeRelation::LeftOf, 1), rel(1, RelativeRelation::LeftOf, 2)],
            ..Default::default()
        };
        let tree = build_semantic_tree(&set, &[]).unwrap();
        assert_eq!(tree.nodes, [0, 1, 2]);
        assert_eq!(tree.edges[0].object, 1);
        assert_eq!(tree.edges[1].subject, 1);
    }

    #[test]
    fn contradiction_is_a_cycle() {
        let set = RelationSet {
            relatives: vec![rel(0, RelativeRelation::LeftOf, 1), rel(1, RelativeRelation::LeftOf, 0)],
            ..Default::default()
        };
        match build_semantic_tree(&set, &[]) {
            Err(Error::CycleDetected { subject, object, relation }) => {
                assert_eq!((subject.as_str(), object.as_str()), ("#1", "#0"));
                assert_eq!(relation, "left-of");
            }
            other => panic!("expected cycle, got {other:?}"),
        }
        // right-of is the mirror of left-of
        let set = RelationSet {
            relatives: vec![rel(0, RelativeRelation::LeftOf, 1), rel(0, RelativeRelation::RightOf, 1)],
            ..Default::default()
        };
        assert!(build_semantic_tree(&set, &[]).is_err());
        // different axes do not conflict
        let set = RelationSet {
            relatives: vec![rel(0, RelativeRelation::LeftOf, 1), rel(1, RelativeRelation::Above, 0)],
            ..Default::default()
        };
        assert!(build_semantic_tree(&set, &[]).is_ok());
    }

    #[test]
    fn between_follows_existing_anchor_order() {
        let set = RelationSet {
            relatives: vec![rel(1, RelativeRelation::Below, 2)],
            betweens: vec![Between { subject: 3, anchors: (1, 2) }],
            ..Default::default()
        };
        let tree = build_semantic_tree(&set, &[]).unwrap();
        assert!(tree.constraints[1..].iter().all(|c| c.axis == Axis::Y));
        assert_eq!(tree.constraints[1].before, 2);
        assert_eq!(tree.edges.len(), 3);
    }
}
