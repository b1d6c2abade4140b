//! Word-level tokenizer and vocabulary.
//!
//! Text is split on whitespace, then punctuation characters and CJK
//! ideographs are broken out as single-character tokens. Each token remembers
//! whether it was preceded by whitespace, so `detokenize(tokenize(s)) == s`
//! for any string whose whitespace is single ASCII spaces without leading or
//! trailing blanks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub space_before: bool,
}

impl Token {
    pub fn new(text: impl Into<String>, space_before: bool) -> Self {
        Token {
            text: text.into(),
            space_before,
        }
    }
}

fn is_split_char(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace()) || is_cjk(c)
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF | 0x3400..=0x4DBF | 0x20000..=0x2A6DF | 0xF900..=0xFAFF | 0x3000..=0x303F | 0xFF00..=0xFFEF)
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut pending_space = false;
    let mut current_space = false;

    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token::new(std::mem::take(&mut current), current_space));
            }
            pending_space = true;
        } else if is_split_char(c) {
            if !current.is_empty() {
                tokens.push(Token::new(std::mem::take(&mut current), current_space));
            }
            tokens.push(Token::new(c.to_string(), pending_space));
            pending_space = false;
        } else {
            if current.is_empty() {
                current_space = pending_space;
                pending_space = false;
            }
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(Token::new(current, current_space));
    }
    if let Some(first) = tokens.first_mut() {
        first.space_before = false;
    }
    tokens
}

/// Joins tokens back into text. The first token never gets a leading space.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && t.space_before {
            out.push(' ');
        }
        out.push_str(&t.text);
    }
    out
}

/// Canonical comparison key for concept strings: lower-cased tokens joined by single spaces.
pub fn normalize(text: &str) -> String {
    tokenize(text)
        .iter()
        .map(|t| t.text.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Position of the first occurrence of `needle` as a contiguous run inside `haystack`,
/// comparing token text only.
pub fn find_subsequence(haystack: &[Token], needle: &[Token]) -> Option<usize> {
    find_all_subsequences(haystack, needle).into_iter().next()
}

pub fn find_all_subsequences(haystack: &[Token], needle: &[Token]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| {
            haystack[i..i + needle.len()]
                .iter()
                .zip(needle)
                .all(|(a, b)| a.text == b.text)
        })
        .collect()
}

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

/// Lower-cased token vocabulary with reserved sentinel ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        Vocab::from_tokens(tokens)
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    pub const PAD_ID: usize = 0;
    pub const UNK_ID: usize = 1;
    pub const CLS_ID: usize = 2;
    pub const SEP_ID: usize = 3;

    /// Builds a vocabulary from token sequences; tokens appearing fewer than `min_count` times map to `[UNK]`.
    pub fn build<'a, I>(sequences: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a [Token]>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for seq in sequences {
            for t in seq {
                *counts.entry(t.text.to_lowercase()).or_default() += 1;
            }
        }
        let mut words: Vec<String> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .map(|(w, _)| w)
            .collect();
        words.sort();
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP].iter().map(|s| s.to_string()).collect();
        tokens.extend(words.into_iter().filter(|w| ![PAD, UNK, CLS, SEP].contains(&w.as_str())));
        Self::from_tokens(tokens)
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        match token {
            CLS => Self::CLS_ID,
            SEP => Self::SEP_ID,
            PAD => Self::PAD_ID,
            _ => *self.index.get(&token.to_lowercase()).unwrap_or(&Self::UNK_ID),
        }
    }

    pub fn ids(&self, tokens: &[Token]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(&t.text)).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Hex SHA-256 over the newline-joined token list.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.tokens {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn splits_punctuation() {
        let t = tokenize("Louisa May Alcott was an American novelist, short story writer.");
        assert_eq!(
            texts(&t),
            ["Louisa", "May", "Alcott", "was", "an", "American", "novelist", ",", "short", "story", "writer", "."]
        );
        assert!(!t[7].space_before);
        assert!(t[8].space_before);
    }

    #[test]
    fn cjk_characters_are_single_tokens() {
        let t = tokenize("韩文是一种文字");
        assert_eq!(t.len(), 7);
        assert_eq!(detokenize(&t), "韩文是一种文字");
    }

    #[test]
    fn subsequence_search() {
        let hay = tokenize("a famous American writer and a writer");
        let needle = tokenize("writer");
        assert_eq!(find_all_subsequences(&hay, &needle), vec![3, 6]);
        assert_eq!(find_subsequence(&hay, &tokenize("American writer")), Some(2));
        assert_eq!(find_subsequence(&hay, &tokenize("novel")), None);
    }

    #[test]
    fn vocab_reserves_sentinels() {
        let seq = tokenize("The Writer the");
        let v = Vocab::build([seq.as_slice()], 1);
        assert_eq!(v.id(CLS), Vocab::CLS_ID);
        assert_eq!(v.id("WRITER"), v.id("writer"));
        assert_eq!(v.id("zebra"), Vocab::UNK_ID);
        assert_eq!(v.len(), 6);
    }

    proptest! {
        #[test]
        fn round_trip_single_spaced(words in proptest::collection::vec("[A-Za-z0-9]{1,6}[,.;]?", 1..12)) {
            let s = words.join(" ");
            prop_assert_eq!(detokenize(&tokenize(&s)), s);
        }
    }
}
