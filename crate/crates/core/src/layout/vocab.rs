//! Relation vocabulary used to detect layout requirements.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming a vocabulary JSON file.
pub const VOCAB_ENV: &str = "LAYOUTCAL_VOCAB";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationCategory {
    Left,
    Right,
    Above,
    Below,
    Between,
    /// Corner terms that only make sense as superlatives.
    SuperlativeExtra,
}

impl RelationCategory {
    pub const ALL: [RelationCategory; 6] = [
        RelationCategory::Left,
        RelationCategory::Right,
        RelationCategory::Above,
        RelationCategory::Below,
        RelationCategory::Between,
        RelationCategory::SuperlativeExtra,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationCategory::Left => "left",
            RelationCategory::Right => "right",
            RelationCategory::Above => "above",
            RelationCategory::Below => "below",
            RelationCategory::Between => "between",
            RelationCategory::SuperlativeExtra => "superlative-extra",
        }
    }
}

impl fmt::Display for RelationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelationCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown relation category `{s}`")))
    }
}

/// Word → category table. Every word maps to exactly one category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationVocabulary {
    words: BTreeMap<String, RelationCategory>,
}

const DEFAULT_WORDS: &[(RelationCategory, &[&str])] = &[
    (RelationCategory::Left, &["left", "west"]),
    (RelationCategory::Right, &["right", "east"]),
    (
        RelationCategory::Above,
        &["above", "over", "on", "top", "north"],
    ),
    (
        RelationCategory::Below,
        &["below", "beneath", "underneath", "under", "bottom", "south"],
    ),
    (RelationCategory::Between, &["between", "among", "middle"]),
    (
        RelationCategory::SuperlativeExtra,
        &["upper-left", "upper-right", "lower-left", "lower-right"],
    ),
];

impl Default for RelationVocabulary {
    fn default() -> Self {
        let words = DEFAULT_WORDS
            .iter()
            .flat_map(|(cat, ws)| ws.iter().map(move |w| (w.to_string(), *cat)))
            .collect();
        RelationVocabulary { words }
    }
}

impl RelationVocabulary {
    pub fn empty() -> Self {
        RelationVocabulary {
            words: BTreeMap::new(),
        }
    }

    pub fn category_of(&self, word: &str) -> Option<RelationCategory> {
        self.words.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    /// Words of one category in lexicographic order.
    pub fn words_in(&self, category: RelationCategory) -> Vec<&str> {
        self.words
            .iter()
            .filter(|(_, c)| **c == category)
            .map(|(w, _)| w.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Adds `word` to `category`. Re-adding a word to its own category is a
    /// no-op; adding it to a second category is rejected.
    pub fn add_word(&mut self, word: &str, category: RelationCategory) -> Result<()> {
        let word = word.trim().to_lowercase();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::InvalidValue(format!(
                "vocabulary entry `{word}` must be a single token"
            )));
        }
        match self.words.get(&word) {
            Some(existing) if *existing != category => Err(Error::InvalidValue(format!(
                "`{word}` already belongs to category {existing}"
            ))),
            _ => {
                self.words.insert(word, category);
                Ok(())
            }
        }
    }

    /// Parses a JSON object `{"category": ["word", ...]}`. Categories named in
    /// the file replace the default word set for that category; others keep
    /// their defaults.
    pub fn from_json_overrides(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
        let mut overrides = BTreeMap::new();
        for (name, words) in raw {
            let cat: RelationCategory = name.parse()?;
            overrides.insert(cat, words);
        }
        let mut vocab = RelationVocabulary::empty();
        for (cat, defaults) in DEFAULT_WORDS {
            match overrides.get(cat) {
                Some(words) => {
                    for w in words {
                        vocab.add_word(w, *cat)?;
                    }
                }
                None => {
                    for w in *defaults {
                        vocab.add_word(w, *cat)?;
                    }
                }
            }
        }
        Ok(vocab)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_overrides(&text)
    }

    /// Vocabulary from `LAYOUTCAL_VOCAB` when set, defaults otherwise.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(VOCAB_ENV) {
            Some(path) if !path.is_empty() => Self::load(path),
            _ => Ok(Self::default()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut map: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for cat in RelationCategory::ALL {
            map.insert(cat.as_str(), self.words_in(cat));
        }
        serde_json::to_string_pretty(&map).expect("string map serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_table() {
        let v = RelationVocabulary::default();
        assert_eq!(v.words_in(RelationCategory::Left), ["left", "west"]);
        assert_eq!(v.words_in(RelationCategory::Right), ["east", "right"]);
        assert_eq!(
            v.words_in(RelationCategory::Above),
            ["above", "north", "on", "over", "top"]
        );
        assert_eq!(
            v.words_in(RelationCategory::Below),
            ["below", "beneath", "bottom", "south", "under", "underneath"]
        );
        assert_eq!(
            v.words_in(RelationCategory::Between),
            ["among", "between", "middle"]
        );
        assert_eq!(
            v.words_in(RelationCategory::SuperlativeExtra),
            ["lower-left", "lower-right", "upper-left", "upper-right"]
        );
        assert_eq!(v.len(), 22);
    }

    #[test]
    fn adding_a_word_keeps_existing_ones() {
        let mut v = RelationVocabulary::default();
        let before = v.clone();
        v.add_word("leftmost", RelationCategory::Left).unwrap();
        for cat in RelationCategory::ALL {
            for w in before.words_in(cat) {
                assert_eq!(v.category_of(w), Some(cat));
            }
        }
        assert_eq!(v.category_of("leftmost"), Some(RelationCategory::Left));
    }

    #[test]
    fn word_cannot_join_two_categories() {
        let mut v = RelationVocabulary::default();
        assert!(v.add_word("left", RelationCategory::Right).is_err());
        assert!(v.add_word("left", RelationCategory::Left).is_ok());
    }

    #[test]
    fn json_override_replaces_named_categories_only() {
        let v = RelationVocabulary::from_json_overrides(r#"{"left": ["left", "port"]}"#).unwrap();
        assert_eq!(v.words_in(RelationCategory::Left), ["left", "port"]);
        assert!(!v.contains("west"));
        assert_eq!(v.category_of("east"), Some(RelationCategory::Right));
        assert!(RelationVocabulary::from_json_overrides(r#"{"sideways": ["x"]}"#).is_err());
        assert!(
            RelationVocabulary::from_json_overrides(r#"{"left": ["east"]}"#).is_err(),
            "east stays in right"
        );
    }
}
