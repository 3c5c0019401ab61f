//! Keyword detection, object extraction and relation parsing.
//!
//! The grammar is closed: object phrases are maximal runs of content words,
//! and the words between two consecutive objects (a "gap") decide the
//! relation. A gap that contains a conjunction (`and` or a clause mark)
//! closes the clause, so any position words before it form a superlative for
//! the preceding object. A gap without a conjunction links the two objects
//! as a relative triple, or as a between quaternion when the head word is in
//! the between category and the next gap is a bare `and`.

use std::fmt;

use serde::Serialize;

use super::boxes::SuperlativeTerm;
use super::tokenize::{tokenize, Token};
use super::vocab::{RelationCategory, RelationVocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabMatch {
    pub word: String,
    pub category: RelationCategory,
    pub token_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Detection {
    pub detected: bool,
    pub matches: Vec<VocabMatch>,
}

pub fn detect_layout_requirement(prompt: &str, vocab: &RelationVocabulary) -> Detection {
    let matches: Vec<VocabMatch> = tokenize(prompt)
        .into_iter()
        .filter_map(|t| {
            vocab.category_of(&t.text).map(|category| VocabMatch {
                word: t.text,
                category,
                token_index: t.index,
            })
        })
        .collect();
    Detection {
        detected: !matches.is_empty(),
        matches,
    }
}

/// A noun phrase naming one object of the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectPhrase {
    pub phrase: String,
    /// Token index of the head noun (the last word of the phrase).
    pub head_token_index: usize,
    /// Token index of the first word of the phrase.
    pub first_token_index: usize,
}

impl ObjectPhrase {
    pub fn token_span(&self) -> std::ops::RangeInclusive<usize> {
        self.first_token_index..=self.head_token_index
    }
}

// Function words that never belong to an object phrase.
const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "to", "of", "in", "at", "on", "and", "with", "is", "are", "be", "there",
    "side", "corner", "part", "hand", "next", "its", "their", "some", "this", "that", "placed",
    "located", "positioned", "sitting", "standing", "image", "picture", "photo", "photograph",
    "frame", "scene", "canvas", "view",
];

fn is_function_word(word: &str) -> bool {
    FUNCTION_WORDS.contains(&word)
}

fn is_content(token: &Token, vocab: &RelationVocabulary) -> bool {
    !is_function_word(&token.text)
        && !vocab.contains(&token.text)
        && !token.text.chars().all(|c| c.is_ascii_digit())
}

/// Extracts object phrases with the default vocabulary.
pub fn extract_objects(prompt: &str) -> Result<Vec<ObjectPhrase>> {
    extract_objects_with(&tokenize(prompt), &RelationVocabulary::default())
}

pub(crate) fn extract_objects_with(
    tokens: &[Token],
    vocab: &RelationVocabulary,
) -> Result<Vec<ObjectPhrase>> {
    let mut objects = Vec::new();
    let mut run: Vec<&Token> = Vec::new();
    let flush = |run: &mut Vec<&Token>, objects: &mut Vec<ObjectPhrase>| {
        if let (Some(first), Some(last)) = (run.first(), run.last()) {
            objects.push(ObjectPhrase {
                phrase: run.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" "),
                head_token_index: last.index,
                first_token_index: first.index,
            });
        }
        run.clear();
    };
    for token in tokens {
        if token.break_before {
            flush(&mut run, &mut objects);
        }
        if is_content(token, vocab) {
            run.push(token);
        } else {
            flush(&mut run, &mut objects);
        }
    }
    flush(&mut run, &mut objects);
    if objects.is_empty() {
        return Err(Error::ParseFailure("no object phrase found in prompt".into()));
    }
    Ok(objects)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelativeRelation {
    LeftOf,
    RightOf,
    Above,
    Below,
}

impl RelativeRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            RelativeRelation::LeftOf => "left-of",
            RelativeRelation::RightOf => "right-of",
            RelativeRelation::Above => "above",
            RelativeRelation::Below => "below",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "left-of" => Ok(RelativeRelation::LeftOf),
            "right-of" => Ok(RelativeRelation::RightOf),
            "above" => Ok(RelativeRelation::Above),
            "below" => Ok(RelativeRelation::Below),
            other => Err(Error::InvalidValue(format!("unknown relation `{other}`"))),
        }
    }
}

impl fmt::Display for RelativeRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Object references are indices into the object list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Superlative {
    pub object: usize,
    pub term: SuperlativeTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Relative {
    pub subject: usize,
    pub relation: RelativeRelation,
    pub object: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Between {
    pub subject: usize,
    pub anchors: (usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RelationSet {
    pub superlatives: Vec<Superlative>,
    pub relatives: Vec<Relative>,
    pub betweens: Vec<Between>,
}

impl RelationSet {
    pub fn is_empty(&self) -> bool {
        self.superlatives.is_empty() && self.relatives.is_empty() && self.betweens.is_empty()
    }

    pub fn superlative_of(&self, object: usize) -> Option<SuperlativeTerm> {
        self.superlatives
            .iter()
            .find(|s| s.object == object)
            .map(|s| s.term)
    }

    /// Checks that every reference addresses one of `n_objects` objects and
    /// that no object has two superlatives.
    pub fn validate(&self, n_objects: usize) -> Result<()> {
        let check = |i: usize| {
            if i < n_objects {
                Ok(())
            } else {
                Err(Error::InvalidValue(format!(
                    "relation references object {i} of {n_objects}"
                )))
            }
        };
        let mut seen = vec![false; n_objects];
        for s in &self.superlatives {
            check(s.object)?;
            if std::mem::replace(&mut seen[s.object], true) {
                return Err(Error::InvalidValue(format!(
                    "object {} has more than one superlative",
                    s.object
                )));
            }
        }
        for r in &self.relatives {
            check(r.subject)?;
            check(r.object)?;
        }
        for b in &self.betweens {
            check(b.subject)?;
            check(b.anchors.0)?;
            check(b.anchors.1)?;
        }
        Ok(())
    }
}

/// Position words of one relation phrase, in prompt order.
struct Phrase<'a> {
    words: Vec<&'a Token>,
    categories: Vec<RelationCategory>,
}

impl<'a> Phrase<'a> {
    fn describe(&self) -> String {
        self.words.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
    }

    fn last_of(&self, pred: impl Fn(RelationCategory) -> bool) -> Option<(&'a Token, RelationCategory)> {
        self.words
            .iter()
            .zip(&self.categories)
            .rev()
            .find(|(t, c)| pred(**c) && !(t.text == "on" && self.words.len() > 1))
            .map(|(t, c)| (*t, *c))
    }

    fn horizontal(&self) -> Option<RelationCategory> {
        self.last_of(|c| matches!(c, RelationCategory::Left | RelationCategory::Right))
            .map(|(_, c)| c)
    }

    fn vertical(&self) -> Option<RelationCategory> {
        self.last_of(|c| matches!(c, RelationCategory::Above | RelationCategory::Below))
            .map(|(_, c)| c)
    }

    fn has(&self, category: RelationCategory) -> bool {
        self.categories.contains(&category)
    }

    fn is_bare_on(&self) -> bool {
        self.words.len() == 1 && self.words[0].text == "on"
    }

    fn superlative_term(&self) -> Result<SuperlativeTerm> {
        use RelationCategory as C;
        if self.is_bare_on() {
            return Err(Error::AmbiguousRelation(
                "`on` without a following object or position term".into(),
            ));
        }
        if let Some((t, _)) = self.last_of(|c| c == C::SuperlativeExtra) {
            return t.text.parse();
        }
        let horizontal = self.horizontal();
        let vertical = self.vertical();
        if self.has(C::Between) {
            if horizontal.is_some() || vertical.is_some() {
                return Err(Error::AmbiguousRelation(format!(
                    "mixed position terms `{}`",
                    self.describe()
                )));
            }
            return Ok(SuperlativeTerm::Middle);
        }
        Ok(match (vertical, horizontal) {
            (Some(C::Above), Some(C::Left)) => SuperlativeTerm::UpperLeft,
            (Some(C::Above), Some(C::Right)) => SuperlativeTerm::UpperRight,
            (Some(C::Below), Some(C::Left)) => SuperlativeTerm::LowerLeft,
            (Some(C::Below), Some(C::Right)) => SuperlativeTerm::LowerRight,
            (Some(C::Above), None) => SuperlativeTerm::Above,
            (Some(C::Below), None) => SuperlativeTerm::Below,
            (None, Some(C::Left)) => SuperlativeTerm::Left,
            (None, Some(C::Right)) => SuperlativeTerm::Right,
            _ => {
                return Err(Error::AmbiguousRelation(format!(
                    "cannot read a position from `{}`",
                    self.describe()
                )))
            }
        })
    }

    fn relative(&self) -> Result<RelativeRelation> {
        use RelationCategory as C;
        if self.is_bare_on() {
            return Ok(RelativeRelation::Above);
        }
        if self.has(C::SuperlativeExtra) {
            return Err(Error::AmbiguousRelation(format!(
                "`{}` cannot relate two objects",
                self.describe()
            )));
        }
        match (self.vertical(), self.horizontal()) {
            (None, Some(C::Left)) => Ok(RelativeRelation::LeftOf),
            (None, Some(C::Right)) => Ok(RelativeRelation::RightOf),
            (Some(C::Above), None) => Ok(RelativeRelation::Above),
            (Some(C::Below), None) => Ok(RelativeRelation::Below),
            _ => Err(Error::AmbiguousRelation(format!(
                "cannot read a relation from `{}`",
                self.describe()
            ))),
        }
    }
}

struct Gap<'a> {
    /// Position words before the first conjunction.
    head: Phrase<'a>,
    /// Whether a conjunction occurs in the gap.
    conjunction: bool,
    /// Position words after the first conjunction.
    trailing: Vec<&'a Token>,
}

fn scan_gap<'a>(
    tokens: &'a [Token],
    range: std::ops::Range<usize>,
    next_breaks: bool,
    vocab: &RelationVocabulary,
) -> Gap<'a> {
    let mut gap = Gap {
        head: Phrase {
            words: Vec::new(),
            categories: Vec::new(),
        },
        conjunction: false,
        trailing: Vec::new(),
    };
    for t in &tokens[range] {
        if t.break_before || t.text == "and" {
            gap.conjunction = true;
        }
        if let Some(cat) = vocab.category_of(&t.text) {
            if gap.conjunction {
                gap.trailing.push(t);
            } else {
                gap.head.words.push(t);
                gap.head.categories.push(cat);
            }
        }
    }
    gap.conjunction |= next_breaks;
    gap
}

/// Parses relations with the given objects (as returned by
/// [`extract_objects`] for the same prompt).
pub fn parse_relations(
    prompt: &str,
    objects: &[ObjectPhrase],
    vocab: &RelationVocabulary,
) -> Result<RelationSet> {
    if objects.is_empty() {
        return Err(Error::ParseFailure("no objects to relate".into()));
    }
    let tokens = tokenize(prompt);
    parse_relations_with(&tokens, objects, vocab)
}

pub(crate) fn parse_relations_with(
    tokens: &[Token],
    objects: &[ObjectPhrase],
    vocab: &RelationVocabulary,
) -> Result<RelationSet> {
    for pair in objects.windows(2) {
        if pair[0].head_token_index >= pair[1].first_token_index {
            return Err(Error::InvalidValue("object spans overlap or are unordered".into()));
        }
    }
    if let Some(last) = objects.last() {
        if last.head_token_index >= tokens.len() {
            return Err(Error::InvalidValue("object span beyond prompt".into()));
        }
    }

    let prefix_end = objects[0].first_token_index;
    if let Some(t) = tokens[..prefix_end].iter().find(|t| vocab.contains(&t.text)) {
        return Err(Error::AmbiguousRelation(format!(
            "`{}` precedes every object",
            t.text
        )));
    }

    let gap_after = |j: usize| {
        let start = objects[j].head_token_index + 1;
        let (end, next_breaks) = match objects.get(j + 1) {
            Some(next) => (next.first_token_index, tokens[next.first_token_index].break_before),
            None => (tokens.len(), false),
        };
        scan_gap(tokens, start..end, next_breaks, vocab)
    };

    let mut set = RelationSet::default();
    let mut j = 0;
    while j < objects.len() {
        let gap = gap_after(j);
        if let Some(t) = gap.trailing.first() {
            return Err(Error::AmbiguousRelation(format!(
                "`{}` after a conjunction is not attached to an object",
                t.text
            )));
        }
        if gap.head.words.is_empty() {
            j += 1;
            continue;
        }
        let has_next = j + 1 < objects.len();
        if gap.conjunction || !has_next {
            set.superlatives.push(Superlative {
                object: j,
                term: gap.head.superlative_term()?,
            });
            j += 1;
            continue;
        }
        if gap.head.has(RelationCategory::Between) {
            // a X between a Y and a Z
            let second = j + 2;
            let joined = second < objects.len() && {
                let link = gap_after(j + 1);
                link.head.words.is_empty() && link.trailing.is_empty() && link.conjunction
            };
            if !joined {
                return Err(Error::AmbiguousRelation(format!(
                    "`{}` needs two anchors joined by `and`",
                    gap.head.describe()
                )));
            }
            set.betweens.push(Between {
                subject: j,
                anchors: (j + 1, second),
            });
            j = second;
            continue;
        }
        set.relatives.push(Relative {
            subject: j,
            relation: gap.head.relative()?,
            object: j + 1,
        });
        j += 1;
    }
    Ok(set)
}
