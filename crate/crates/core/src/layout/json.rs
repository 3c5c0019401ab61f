//! Layout JSON.
//!
//! ```text
//! {"prompt": str,
//!  "objects": [{"phrase": str, "head_token_index": int, "box": [cx, cy, w, h]}],
//!  "relations": {"superlatives": [[obj, term]],
//!                "relatives": [[s, rel, o]],
//!                "betweens": [[s, a1, a2]]}}
//! ```
//!
//! Field order is fixed and floats carry exactly six decimals. Relations name
//! objects by phrase.

use std::fmt::Write as _;

use serde::Deserialize;

use super::allocate::ParsedLayout;
use super::boxes::{RelBox, SuperlativeTerm};
use super::parse::{Between, ObjectPhrase, RelationSet, Relative, RelativeRelation, Superlative};
use super::tokenize::tokenize;
use crate::error::{Error, Result};

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn layout_to_json(layout: &ParsedLayout) -> String {
    let name = |i: usize| quote(&layout.objects[i].phrase);
    let mut out = String::new();
    write!(out, "{{\"prompt\": {}, \"objects\": [", quote(&layout.prompt)).unwrap();
    for (i, (o, b)) in layout.objects.iter().zip(&layout.boxes).enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(
            out,
            "{{\"phrase\": {}, \"head_token_index\": {}, \"box\": [{:.6}, {:.6}, {:.6}, {:.6}]}}",
            quote(&o.phrase),
            o.head_token_index,
            b.cx,
            b.cy,
            b.w,
            b.h
        )
        .unwrap();
    }
    let rel = &layout.relations;
    let sups: Vec<String> = rel
        .superlatives
        .iter()
        .map(|s| format!("[{}, {}]", name(s.object), quote(s.term.as_str())))
        .collect();
    let rels: Vec<String> = rel
        .relatives
        .iter()
        .map(|r| format!("[{}, {}, {}]", name(r.subject), quote(r.relation.as_str()), name(r.object)))
        .collect();
    let bets: Vec<String> = rel
        .betweens
        .iter()
        .map(|b| format!("[{}, {}, {}]", name(b.subject), name(b.anchors.0), name(b.anchors.1)))
        .collect();
    write!(
        out,
        "], \"relations\": {{\"superlatives\": [{}], \"relatives\": [{}], \"betweens\": [{}]}}}}",
        sups.join(", "),
        rels.join(", "),
        bets.join(", ")
    )
    .unwrap();
    out
}

#[derive(Deserialize)]
struct RawObject {
    phrase: String,
    head_token_index: usize,
    #[serde(rename = "box")]
    bbox: [f64; 4],
}

#[derive(Deserialize, Default)]
struct RawRelations {
    #[serde(default)]
    superlatives: Vec<(String, String)>,
    #[serde(default)]
    relatives: Vec<(String, String, String)>,
    #[serde(default)]
    betweens: Vec<(String, String, String)>,
}

#[derive(Deserialize)]
struct RawLayout {
    prompt: String,
    objects: Vec<RawObject>,
    #[serde(default)]
    relations: RawRelations,
}

pub fn layout_from_json(text: &str) -> Result<ParsedLayout> {
    let raw: RawLayout =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("layout json: {e}")))?;
    let objects: Vec<ObjectPhrase> = raw
        .objects
        .iter()
        .map(|o| {
            let words = o.phrase.split_whitespace().count().max(1);
            ObjectPhrase {
                phrase: o.phrase.clone(),
                head_token_index: o.head_token_index,
                first_token_index: o.head_token_index.saturating_sub(words - 1),
            }
        })
        .collect();
    let index = |name: &str| {
        objects
            .iter()
            .position(|o| o.phrase == name)
            .ok_or_else(|| Error::Format(format!("relation names unknown object `{name}`")))
    };
    let mut relations = RelationSet::default();
    for (o, term) in &raw.relations.superlatives {
        relations.superlatives.push(Superlative {
            object: index(o)?,
            term: term.parse::<SuperlativeTerm>()?,
        });
    }
    for (s, r, o) in &raw.relations.relatives {
        relations.relatives.push(Relative {
            subject: index(s)?,
            relation: RelativeRelation::parse(r).map_err(|e| Error::Format(e.to_string()))?,
            object: index(o)?,
        });
    }
    for (s, a1, a2) in &raw.relations.betweens {
        relations.betweens.push(Between {
            subject: index(s)?,
            anchors: (index(a1)?, index(a2)?),
        });
    }
    relations.validate(objects.len()).map_err(|e| Error::Format(e.to_string()))?;
    let boxes = raw
        .objects
        .iter()
        .map(|o| {
            let [cx, cy, w, h] = o.bbox;
            RelBox::new(cx, cy, w, h).map_err(|e| Error::Format(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParsedLayout {
        num_tokens: tokenize(&raw.prompt).len(),
        prompt: raw.prompt,
        objects,
        relations,
        boxes,
    })
}
