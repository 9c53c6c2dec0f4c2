//! Drug-name cleaning and tokenization.
//!
//! Cleaning runs four passes over the trimmed name: whitespace removal,
//! bracketed-fragment removal, symbol removal, and brand removal. Every
//! removed run is recorded with its position so the original can be rebuilt
//! from the cleaned text plus the audit trail.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BRACKET_PAIRS: [(char, char); 5] = [('（', '）'), ('(', ')'), ('【', '】'), ('[', ']'), ('「', '」')];

pub const DEFAULT_SYMBOLS: &[char] = &[
    '*', '·', '-', '/', '+', ',', '，', '.', '。', ':', '：', ';', '；', '"', '\'', '“', '”', '‘', '’',
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    Whitespace,
    Bracket,
    Symbol,
    Brand,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removed {
    pub fragment: String,
    pub reason: RemovalReason,
    /// Offset, in code points, of the fragment's first character within the
    /// trimmed input.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanName {
    pub text: String,
    pub removed: Vec<Removed>,
}

impl CleanName {
    /// Rebuilds the trimmed input from the cleaned text and the removal log.
    pub fn reconstruct(&self) -> String {
        let total = self.text.chars().count() + self.removed.iter().map(|r| r.fragment.chars().count()).sum::<usize>();
        let mut slots: Vec<Option<char>> = vec![None; total];
        for r in &self.removed {
            for (k, c) in r.fragment.chars().enumerate() {
                slots[r.position + k] = Some(c);
            }
        }
        let mut kept = self.text.chars();
        slots
            .into_iter()
            .map(|s| s.or_else(|| kept.next()).expect("slot count matches"))
            .collect()
    }

    pub fn tokens(&self, mode: TokenMode) -> TokenSeq {
        tokenize(&self.text, mode)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CleanError {
    #[error("cleaning removed the whole name {0:?}")]
    EmptyResult(String),
}

/// Known brand prefixes, matched longest-first against the start of a name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BrandLexicon {
    brands: BTreeSet<String>,
}

impl BrandLexicon {
    pub fn new<I, S>(brands: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            brands: brands
                .into_iter()
                .map(Into::into)
                .filter(|b: &String| !b.is_empty())
                .collect(),
        }
    }

    /// One brand per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn len(&self) -> usize {
        self.brands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brands.is_empty()
    }

    fn longest_prefix_of(&self, s: &str) -> Option<&str> {
        self.brands
            .iter()
            .filter(|b| s.starts_with(b.as_str()))
            .max_by_key(|b| b.len())
            .map(String::as_str)
    }
}

/// Name cleaner with a configurable symbol set.
#[derive(Debug, Clone)]
pub struct NameCleaner {
    symbols: BTreeSet<char>,
}

impl Default for NameCleaner {
    fn default() -> Self {
        Self::with_symbols(DEFAULT_SYMBOLS.iter().copied())
    }
}

impl NameCleaner {
    pub fn with_symbols(symbols: impl IntoIterator<Item = char>) -> Self {
        Self {
            symbols: symbols.into_iter().collect(),
        }
    }

    pub fn clean(&self, raw: &str, lexicon: &BrandLexicon) -> Result<CleanName, CleanError> {
        let chars: Vec<char> = raw.trim().chars().collect();
        let mut marks: Vec<Option<RemovalReason>> = vec![None; chars.len()];

        // Whitespace. The first whitespace-delimited token is a brand candidate.
        let leading_token = chars.iter().position(|c| c.is_whitespace()).map(|end| 0..end);
        for (c, m) in chars.iter().zip(marks.iter_mut()) {
            if c.is_whitespace() {
                *m = Some(RemovalReason::Whitespace);
            }
        }

        // Brackets, matched per pair type with nesting; strays are dropped alone.
        let mut i = 0;
        while i < chars.len() {
            if let Some(&(open, close)) = BRACKET_PAIRS.iter().find(|(o, _)| *o == chars[i]) {
                let end = matching_close(&chars, i, open, close).unwrap_or(i);
                mark_unset(&mut marks[i..=end], RemovalReason::Bracket);
                i = end + 1;
            } else {
                if BRACKET_PAIRS.iter().any(|(_, c)| *c == chars[i]) {
                    mark_unset(&mut marks[i..=i], RemovalReason::Bracket);
                }
                i += 1;
            }
        }

        for (c, m) in chars.iter().zip(marks.iter_mut()) {
            if m.is_none() && self.symbols.contains(c) {
                *m = Some(RemovalReason::Symbol);
            }
        }

        // Brand removal never empties the name.
        if let Some(token) = leading_token {
            let kept_outside = (token.end..chars.len()).any(|k| marks[k].is_none());
            if kept_outside {
                mark_unset(&mut marks[token], RemovalReason::Brand);
            }
        }
        loop {
            let kept: Vec<usize> = (0..chars.len()).filter(|&k| marks[k].is_none()).collect();
            let text: String = kept.iter().map(|&k| chars[k]).collect();
            let Some(brand) = lexicon.longest_prefix_of(&text) else {
                break;
            };
            let n = brand.chars().count();
            if n >= kept.len() {
                break;
            }
            for &k in &kept[..n] {
                marks[k] = Some(RemovalReason::Brand);
            }
        }

        let text: String = chars
            .iter()
            .zip(&marks)
            .filter(|(_, m)| m.is_none())
            .map(|(c, _)| *c)
            .collect();
        if text.is_empty() {
            return Err(CleanError::EmptyResult(raw.to_string()));
        }
        Ok(CleanName {
            text,
            removed: removal_log(&chars, &marks),
        })
    }
}

fn matching_close(chars: &[char], start: usize, open: char, close: char) -> Option<usize> {
    let mut depth = 0usize;
    for (k, &c) in chars.iter().enumerate().skip(start) {
        if c == open {
            depth += 1;
        } else if c == close {
            depth -= 1;
            if depth == 0 {
                return Some(k);
            }
        }
    }
    None
}

fn mark_unset(marks: &mut [Option<RemovalReason>], reason: RemovalReason) {
    for m in marks.iter_mut().filter(|m| m.is_none()) {
        *m = Some(reason);
    }
}

fn removal_log(chars: &[char], marks: &[Option<RemovalReason>]) -> Vec<Removed> {
    let mut log: Vec<Removed> = Vec::new();
    for (k, (&c, m)) in chars.iter().zip(marks).enumerate() {
        let Some(reason) = *m else { continue };
        match log.last_mut() {
            Some(last) if last.reason == reason && last.position + last.fragment.chars().count() == k => {
                last.fragment.push(c)
            }
            _ => log.push(Removed {
                fragment: c.to_string(),
                reason,
                position: k,
            }),
        }
    }
    log
}

/// Cleans with the default symbol set.
pub fn clean_name(raw: &str, lexicon: &BrandLexicon) -> Result<CleanName, CleanError> {
    NameCleaner::default().clean(raw, lexicon)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenMode {
    #[default]
    #[serde(rename = "unigram")]
    CharUnigram,
    #[serde(rename = "bigram")]
    CharBigram,
}

impl FromStr for TokenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unigram" | "char_unigram" => Ok(TokenMode::CharUnigram),
            "bigram" | "char_bigram" => Ok(TokenMode::CharBigram),
            other => Err(format!("unknown token mode {other:?} (expected unigram or bigram)")),
        }
    }
}

impl fmt::Display for TokenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenMode::CharUnigram => "unigram",
            TokenMode::CharBigram => "bigram",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

pub fn tokenize(text: &str, mode: TokenMode) -> TokenSeq {
    let chars: Vec<char> = text.chars().collect();
    let tokens = match mode {
        TokenMode::CharUnigram => chars.iter().map(char::to_string).collect(),
        TokenMode::CharBigram if chars.len() == 1 => vec![chars[0].to_string()],
        TokenMode::CharBigram => chars.windows(2).map(|w| w.iter().collect()).collect(),
    };
    TokenSeq(tokens)
}
