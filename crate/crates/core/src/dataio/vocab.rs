use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::Example;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const CLS: usize = 2;
pub const SEP: usize = 3;

const SPECIALS: [&str; 4] = ["[pad]", "[unk]", "[cls]", "[sep]"];

/// Dense token ids with the four specials at 0..4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Specials followed by the given words (lowercased, deduplicated,
    /// first occurrence wins).
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut index: HashMap<String, usize> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        for w in words {
            let w = w.as_ref().to_lowercase();
            if !index.contains_key(&w) {
                index.insert(w.clone(), tokens.len());
                tokens.push(w);
            }
        }
        Vocab { tokens, index }
    }

    /// Every whitespace token in the examples, in sorted order.
    pub fn from_examples(examples: &[Example]) -> Self {
        let words: BTreeSet<String> = examples
            .iter()
            .flat_map(|e| std::iter::once(&e.text).chain(e.text2.as_ref()))
            .flat_map(|t| t.split_whitespace().map(str::to_lowercase))
            .collect();
        Self::from_words(words)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode_example(&self, e: &Example) -> Vec<usize> {
        let mut ids = tokenize(&e.text, self);
        if let Some(t2) = &e.text2 {
            ids.push(SEP);
            ids.extend(tokenize(t2, self));
        }
        ids
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }
}

/// Whitespace split and lowercase; unknown words map to `UNK`.
pub fn tokenize(text: &str, vocab: &Vocab) -> Vec<usize> {
    text.split_whitespace()
        .map(|w| vocab.id(&w.to_lowercase()).unwrap_or(UNK))
        .collect()
}

pub fn detokenize(ids: &[usize], vocab: &Vocab) -> String {
    ids.iter()
        .map(|&i| vocab.token(i).unwrap_or(SPECIALS[UNK]))
        .collect::<Vec<_>>()
        .join(" ")
}
