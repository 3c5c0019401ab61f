//! Prompt tokenizer.
//!
//! Lowercases, splits on whitespace and punctuation, and keeps intra-word
//! hyphens so compounds like `upper-left` survive as one token. Token indices
//! count words only; punctuation is not a token but clause-separating marks
//! (`,` `;` `:` `.` `!` `?`) are remembered on the following token.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub text: String,
    pub index: usize,
    /// A clause-separating punctuation mark occurs between this token and
    /// the previous one.
    pub break_before: bool,
}

fn is_clause_mark(c: char) -> bool {
    matches!(c, ',' | ';' | ':' | '.' | '!' | '?')
}

pub fn tokenize(prompt: &str) -> Vec<Token> {
    let chars: Vec<char> = prompt.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut pending_break = false;

    let flush = |current: &mut String, pending_break: &mut bool, tokens: &mut Vec<Token>| {
        if !current.is_empty() {
            tokens.push(Token {
                text: std::mem::take(current),
                index: tokens.len(),
                break_before: *pending_break,
            });
            *pending_break = false;
        }
    };

    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if c == '-'
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('-');
        } else {
            flush(&mut current, &mut pending_break, &mut tokens);
            if is_clause_mark(c) && !tokens.is_empty() {
                pending_break = true;
            }
        }
    }
    flush(&mut current, &mut pending_break, &mut tokens);
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(p: &str) -> Vec<String> {
        tokenize(p).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(
            texts("A Dog to the LEFT of a cat."),
            ["a", "dog", "to", "the", "left", "of", "a", "cat"]
        );
    }

    #[test]
    fn keeps_intra_word_hyphens_only() {
        assert_eq!(texts("a cup on the upper-left"), ["a", "cup", "on", "the", "upper-left"]);
        assert_eq!(texts("left- right -x"), ["left", "right", "x"]);
        assert_eq!(texts("a--b"), ["a", "b"]);
    }

    #[test]
    fn records_clause_breaks() {
        let toks = tokenize("a dog on the left, a cat");
        assert!(toks[5].break_before);
        assert_eq!(toks[5].text, "a");
        assert!(toks.iter().filter(|t| t.break_before).count() == 1);
        assert!(!tokenize(", a dog")[0].break_before);
    }

    #[test]
    fn empty_and_punctuation_only() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.; ").is_empty());
    }
}
