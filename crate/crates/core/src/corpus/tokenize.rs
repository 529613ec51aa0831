//! Rule-based sentence splitting and tokenisation.
//!
//! Offsets are character (code point) offsets. A token is either a word,
//! i.e. a run of alphanumeric characters in which `-` and `_` may join two
//! alphanumeric characters and `.` or `,` may join two digits, or a single
//! non-alphanumeric, non-whitespace character. Every non-whitespace
//! character belongs to exactly one token.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Character offset of the first character.
    pub start: usize,
    /// Character offset one past the last character.
    pub end: usize,
}

pub type Sentence = Vec<Token>;

/// Lower-cased whitespace chunks ending in `.` that never end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "al.", "fig.", "figs.", "vs.", "approx.", "etc.", "cf.", "ca.", "resp.",
    "no.", "nos.", "ref.", "refs.", "eq.", "dr.", "mr.", "ms.", "prof.", "sp.", "spp.",
];

fn joins(prev: char, c: char, next: Option<char>) -> bool {
    let Some(next) = next else { return false };
    match c {
        '-' | '_' => prev.is_alphanumeric() && next.is_alphanumeric(),
        '.' | ',' => prev.is_ascii_digit() && next.is_ascii_digit(),
        _ => false,
    }
}

/// Tokenises `text`, shifting every offset by `base`.
pub fn tokenize_at(text: &str, base: usize) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_alphanumeric() {
            i += 1;
            while i < chars.len() {
                let ch = chars[i];
                if ch.is_alphanumeric() || joins(chars[i - 1], ch, chars.get(i + 1).copied()) {
                    i += 1;
                } else {
                    break;
                }
            }
        } else {
            i += 1;
        }
        tokens.push(Token {
            text: chars[start..i].iter().collect(),
            start: base + start,
            end: base + i,
        });
    }
    tokens
}

pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_at(text, 0)
}

/// Alphanumeric tokens of `text`, used to look up the words of a mention.
pub fn word_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.text.chars().any(char::is_alphanumeric))
        .map(|t| t.text)
        .collect()
}

fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut s = dot;
    while s > 0 && !chars[s - 1].is_whitespace() {
        s -= 1;
    }
    let chunk: String = chars[s..=dot].iter().collect::<String>().to_lowercase();
    let chunk = chunk.trim_start_matches(['(', '[', '"', '\'']);
    ABBREVIATIONS.contains(&chunk)
}

/// Splits `text` into sentences of tokens. A `.`, `!` or `?` token ends a
/// sentence when whitespace follows and the next token starts with an
/// upper-case letter or a digit, unless the chunk before the `.` is a
/// known abbreviation. The end of the text always ends a sentence.
pub fn segment_at(text: &str, base: usize) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let tokens = tokenize_at(text, base);
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (k, tok) in tokens.iter().enumerate() {
        current.push(tok.clone());
        let is_terminator = matches!(tok.text.as_str(), "." | "!" | "?");
        if !is_terminator {
            continue;
        }
        let Some(next) = tokens.get(k + 1) else { continue };
        let gap = next.start > tok.end;
        let first = next.text.chars().next().unwrap_or(' ');
        let starts_sentence = first.is_uppercase() || first.is_ascii_digit();
        let local = tok.start - base;
        if gap && starts_sentence && !(tok.text == "." && is_abbreviation(&chars, local)) {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

pub fn segment(text: &str) -> Vec<Sentence> {
    segment_at(text, 0)
}

fn numeric_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:\d+(?:[.,]\d+)*|\d*\.\d+)(?:[eE][+-]?\d+)?$").expect("valid regex")
    })
}

/// Integer, decimal or scientific literal, after stripping one leading sign.
pub fn is_numeric(token: &str) -> bool {
    let stripped = token.strip_prefix(['+', '-', '−']).unwrap_or(token);
    numeric_re().is_match(stripped)
}

/// Token with no alphanumeric character.
pub fn is_special(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &Sentence) -> Vec<&str> {
        s.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn two_simple_sentences() {
        let s = segment("A binds B. C binds D.");
        assert_eq!(s.len(), 2);
        assert_eq!(texts(&s[0]), vec!["A", "binds", "B", "."]);
        assert_eq!(s[1][0].start, 11);
    }

    #[test]
    fn punctuation_is_split_off() {
        let s = segment("p53 (TP53) binds MDM2.");
        assert_eq!(texts(&s[0]), vec!["p53", "(", "TP53", ")", "binds", "MDM2", "."]);
    }

    #[test]
    fn decimals_and_hyphens_stay_whole() {
        let t: Vec<String> = tokenize("IL-6 rose 3.5-fold, 1,000 cells *").into_iter().map(|t| t.text).collect();
        assert_eq!(t, vec!["IL-6", "rose", "3.5-fold", ",", "1,000", "cells", "*"]);
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(segment("Kinases, e.g. ATM, act. Others too.").len(), 2);
        assert_eq!(segment("Smith et al. Reported it.").len(), 1);
        assert_eq!(segment("It binds. then stops.").len(), 1);
        assert_eq!(segment("Levels rose. 5 mice died!  Why?").len(), 3);
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(segment("").is_empty());
        assert!(segment("   \n ").is_empty());
    }

    #[test]
    fn numeric_patterns() {
        for s in ["3", "3.5", "-2", "1,000", "1e-5", "2.5E3", ".5", "+7"] {
            assert!(is_numeric(s), "{s}");
        }
        for s in ["p53", "3a", "e5", "-", "3.", "NUMBER"] {
            assert!(!is_numeric(s), "{s}");
        }
    }

    #[test]
    fn offsets_use_characters() {
        let t = tokenize("αβ binds γ");
        assert_eq!((t[1].start, t[1].end), (3, 8));
        assert_eq!((t[2].start, t[2].end), (9, 10));
    }
}
