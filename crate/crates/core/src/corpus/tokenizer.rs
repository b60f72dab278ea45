use std::ops::Range;

use regex::Regex;
use std::sync::OnceLock;

use super::CorpusError;

/// Splits text into token byte spans.
///
/// Implementations must cover every non-whitespace character with some span
/// and return spans in increasing, non-overlapping order. Chunking relies on
/// this to guarantee that the text between two chunks is pure whitespace.
pub trait Tokenizer {
    fn spans(&self, text: &str) -> Result<Vec<Range<usize>>, CorpusError>;

    fn count(&self, text: &str) -> Result<usize, CorpusError> {
        Ok(self.spans(text)?.len())
    }

    fn name(&self) -> &str;
}

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\w+|[^\w\s]").expect("static regex"))
}

/// Word-level tokenizer: runs of word characters, and every other
/// non-whitespace character on its own.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

impl Tokenizer for WordTokenizer {
    fn spans(&self, text: &str) -> Result<Vec<Range<usize>>, CorpusError> {
        Ok(word_regex().find_iter(text).map(|m| m.range()).collect())
    }

    fn name(&self) -> &str {
        "words"
    }
}

/// One token per Unicode scalar value, whitespace included.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn spans(&self, text: &str) -> Result<Vec<Range<usize>>, CorpusError> {
        Ok(text
            .char_indices()
            .map(|(i, c)| i..i + c.len_utf8())
            .collect())
    }

    fn name(&self) -> &str {
        "chars"
    }
}

/// Resolve a tokenizer by the name stored in corpus files.
pub fn by_name(name: &str) -> Result<Box<dyn Tokenizer + Send + Sync>, CorpusError> {
    match name {
        "words" => Ok(Box::new(WordTokenizer)),
        "chars" => Ok(Box::new(CharTokenizer)),
        other => Err(CorpusError::UnknownTokenizer(other.to_string())),
    }
}
