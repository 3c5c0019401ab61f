//! Prompt → target layout.

mod allocate;
mod boxes;
mod json;
mod parse;
mod tokenize;
mod tree;
mod vocab;

pub use allocate::{allocate_layout, LayoutConfig, ParsedLayout, DEFAULT_MARGIN, DEFAULT_MIN_BOX};
pub use boxes::{assign_superlative_box, RelBox, SuperlativeTerm};
pub use json::{layout_from_json, layout_to_json};
pub use parse::{
    detect_layout_requirement, extract_objects, parse_relations, Between, Detection, ObjectPhrase,
    RelationSet, Relative, RelativeRelation, Superlative, VocabMatch,
};
pub use tokenize::{tokenize, Token};
pub use tree::{build_semantic_tree, Axis, AxisConstraint, EdgeLabel, SemanticTree, TreeEdge};
pub use vocab::{RelationCategory, RelationVocabulary, VOCAB_ENV};

use crate::error::{Error, Result};

/// Full prompt → layout path: detection, objects, relations, allocation.
///
/// Fails with [`Error::ParseFailure`] when the prompt carries no layout
/// keyword.
pub fn parse_layout(prompt: &str, vocab: &RelationVocabulary, cfg: &LayoutConfig) -> Result<ParsedLayout> {
    let tokens = tokenize(prompt);
    if !tokens.iter().any(|t| vocab.contains(&t.text)) {
        return Err(Error::ParseFailure("prompt has no layout requirement".into()));
    }
    let objects = parse::extract_objects_with(&tokens, vocab)?;
    let relations = parse::parse_relations_with(&tokens, &objects, vocab)?;
    allocate_layout(prompt, tokens.len(), &objects, &relations, cfg)
}
