use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Tokenizer, WordTokenizer};

pub const UNK: u32 = 0;
pub const BOS: u32 = 1;
const SPECIALS: [&str; 2] = ["<unk>", "<bos>"];

/// Lower-cased word vocabulary with `<unk>` and `<bos>` at ids 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocab { words, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.words
    }
}

fn normalize(word: &str) -> String {
    word.to_lowercase()
}

impl Vocab {
    /// Build from texts, keeping the `max_size` most frequent words (ties
    /// broken alphabetically so the result is deterministic).
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            for w in words(text) {
                *counts.entry(normalize(w)).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut list: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        list.extend(
            ranked
                .into_iter()
                .take(max_size.saturating_sub(SPECIALS.len()))
                .map(|(w, _)| w),
        );
        Vocab::from(list)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> u32 {
        self.index.get(&normalize(word)).copied().unwrap_or(UNK)
    }

    pub fn word(&self, id: u32) -> &str {
        self.words.get(id as usize).map(String::as_str).unwrap_or("<unk>")
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        words(text).map(|w| self.id(w)).collect()
    }

    /// Join words back into text, attaching punctuation to the previous word.
    pub fn decode(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            let w = self.word(id);
            let attach = w.chars().all(|c| ",.;:!?)%".contains(c));
            if !out.is_empty() && !attach && !out.ends_with(['(', '£', '$']) {
                out.push(' ');
            }
            out.push_str(w);
        }
        out
    }
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    WordTokenizer
        .spans(text)
        .expect("word tokenizer is infallible")
        .into_iter()
        .map(move |r| &text[r])
}
