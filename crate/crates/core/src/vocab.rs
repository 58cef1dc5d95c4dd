//! Tokenization and vocabulary construction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Reserved index of the unknown-token row.
pub const UNK_INDEX: usize = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// Lowercase and split on whitespace. Empty input gives an empty list.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.to_lowercase())
        .collect()
}

/// Token ↔ index mapping with a fixed UNK at index 0. Built from the
/// training corpus only; tokens unseen in training map to UNK later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build from an iterator of texts, keeping tokens in first-occurrence
    /// order (min frequency 1).
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self {
            tokens: vec![UNK_TOKEN.to_string()],
            index: HashMap::from([(UNK_TOKEN.to_string(), UNK_INDEX)]),
        };
        for text in texts {
            for tok in tokenize(text) {
                v.intern(tok);
            }
        }
        v
    }

    /// Restore from a serialized token list (index map is rebuilt).
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }

    fn intern(&mut self, tok: String) -> usize {
        if let Some(&i) = self.index.get(&tok) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(tok.clone(), i);
        self.tokens.push(tok);
        i
    }

    /// Index of a token, falling back to UNK. Total for any string.
    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_INDEX)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Map a text to token indices; empty text maps to a single UNK so every
    /// utterance has at least one step for the encoders.
    pub fn encode_text(&self, text: &str) -> Vec<usize> {
        let ids: Vec<usize> = tokenize(text).iter().map(|t| self.index_of(t)).collect();
        if ids.is_empty() {
            vec![UNK_INDEX]
        } else {
            ids
        }
    }
}
