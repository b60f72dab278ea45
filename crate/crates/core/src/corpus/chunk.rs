use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Document, Tokenizer};

/// Smallest chunk length accepted by [`chunk_text`].
pub const MIN_CHUNK_LEN: usize = 16;

/// A token-bounded slice of one document's text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// Index of the source document within its corpus.
    pub doc: usize,
    /// Byte offsets into the document text.
    pub start: usize,
    pub end: usize,
    pub tokens: usize,
    pub text: String,
}

impl Chunk {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

fn is_ws(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

/// Greedy chunker: fill each chunk with up to `max_tokens` tokens, then back
/// off to the last whitespace boundary inside the window. Windows without
/// any whitespace boundary are split hard at the limit.
///
/// Returned ranges are trimmed of surrounding whitespace and never empty.
pub fn chunk_ranges(
    text: &str,
    tokenizer: &dyn Tokenizer,
    max_tokens: usize,
) -> Result<Vec<(Range<usize>, usize)>, CorpusError> {
    if max_tokens < MIN_CHUNK_LEN {
        return Err(CorpusError::ChunkLenTooSmall(max_tokens));
    }
    let spans = tokenizer.spans(text)?;
    let n = spans.len();
    let boundary = |k: usize| -> bool {
        is_ws(&text[spans[k - 1].clone()])
            || is_ws(&text[spans[k].clone()])
            || text[spans[k - 1].end..spans[k].start]
                .chars()
                .any(char::is_whitespace)
    };

    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let limit = (i + max_tokens).min(n);
        let cut = if limit == n {
            n
        } else {
            (i + 1..=limit).rev().find(|&k| boundary(k)).unwrap_or(limit)
        };
        // Trim whitespace tokens at both ends before measuring.
        let mut lo = i;
        let mut hi = cut;
        while lo < hi && is_ws(&text[spans[lo].clone()]) {
            lo += 1;
        }
        while hi > lo && is_ws(&text[spans[hi - 1].clone()]) {
            hi -= 1;
        }
        if lo < hi {
            let raw = spans[lo].start..spans[hi - 1].end;
            let slice = &text[raw.clone()];
            let lead = slice.len() - slice.trim_start().len();
            let trail = slice.len() - slice.trim_end().len();
            let range = raw.start + lead..raw.end - trail;
            if !range.is_empty() {
                out.push((range, hi - lo));
            }
        }
        i = cut;
    }
    Ok(out)
}

/// Chunk every document, tagging each chunk with its document index.
pub fn chunk_documents(
    documents: &[Document],
    tokenizer: &dyn Tokenizer,
    max_tokens: usize,
) -> Result<Vec<Chunk>, CorpusError> {
    let mut chunks = Vec::new();
    for (idx, doc) in documents.iter().enumerate() {
        let ranges = chunk_ranges(&doc.text, tokenizer, max_tokens).map_err(|e| match e {
            CorpusError::ChunkLenTooSmall(_) => e,
            other => CorpusError::Tokenizer {
                url: doc.url.clone(),
                reason: other.to_string(),
            },
        })?;
        chunks.extend(ranges.into_iter().map(|(r, tokens)| Chunk {
            doc: idx,
            start: r.start,
            end: r.end,
            tokens,
            text: doc.text[r].to_string(),
        }));
    }
    Ok(chunks)
}

/// Rebuild a document's text from its chunks, restoring the whitespace that
/// separated them. Returns `None` if the chunks do not tile the text with
/// whitespace-only gaps.
pub fn reassemble(text: &str, chunks: &[&Chunk]) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for c in chunks {
        if c.start < pos || c.end > text.len() || text.get(c.start..c.end)? != c.text {
            return None;
        }
        let gap = text.get(pos..c.start)?;
        if !is_ws(gap) {
            return None;
        }
        out.push_str(gap);
        out.push_str(&c.text);
        pos = c.end;
    }
    let tail = text.get(pos..)?;
    if !is_ws(tail) {
        return None;
    }
    out.push_str(tail);
    Some(out)
}
