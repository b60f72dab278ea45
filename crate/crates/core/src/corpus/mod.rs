//! Target and safe text corpora: fetching, cleaning, chunking, persistence.

mod chunk;
mod clean;
pub mod commoncrawl;
mod document;
pub mod ingest;
mod store;
mod tokenizer;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use chunk::{chunk_documents, chunk_ranges, reassemble, Chunk, MIN_CHUNK_LEN};
pub use clean::clean_html;
pub use document::{contains_markup, Document};
pub use store::{
    corpus_name_from_path, read_corpus, read_corpus_dir, read_documents, write_corpus,
    write_documents, CORPUS_EXT,
};
pub use tokenizer::{by_name as tokenizer_by_name, CharTokenizer, Tokenizer, WordTokenizer};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("not an absolute URL: {0}")]
    InvalidUrl(String),
    #[error("invalid document {url}: {reason}")]
    InvalidDocument { url: String, reason: String },
    #[error("no extractable text")]
    NoText,
    #[error("empty capture")]
    EmptyCapture,
    #[error("chunk length {0} is below the minimum of {MIN_CHUNK_LEN} tokens")]
    ChunkLenTooSmall(usize),
    #[error("corpus has no documents")]
    NoDocuments,
    #[error("tokenizer failed on {url}: {reason}")]
    Tokenizer { url: String, reason: String },
    #[error("unknown tokenizer {0:?}")]
    UnknownTokenizer(String),
    #[error("target and safe corpora share {} url(s), e.g. {}", .0.len(), .0[0])]
    Overlap(Vec<String>),
    #[error("network error (retriable): {0}")]
    Network(String),
    #[error("bad response from {url}: {reason}")]
    Protocol { url: String, reason: String },
    #[error("{path}:{line}: {reason}")]
    Format {
        path: String,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    /// Whether retrying the same request may succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(self, CorpusError::Network(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Target,
    Safe,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "target" => Ok(Role::Target),
            "safe" => Ok(Role::Safe),
            other => Err(format!("unknown corpus role {other:?} (expected target|safe)")),
        }
    }
}

/// A named, chunked collection of documents playing one role in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub role: Role,
    pub documents: Vec<Document>,
    pub chunks: Vec<Chunk>,
    pub chunk_len: usize,
    pub tokenizer: String,
}

impl Corpus {
    pub fn urls(&self) -> BTreeSet<&str> {
        self.documents.iter().map(|d| d.url.as_str()).collect()
    }

    pub fn chunk_texts(&self) -> Vec<&str> {
        self.chunks.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn chunks_of(&self, doc: usize) -> Vec<&Chunk> {
        self.chunks.iter().filter(|c| c.doc == doc).collect()
    }

    pub fn document_by_url(&self, url: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.url == url)
    }
}

/// Chunk `documents` into a corpus.
pub fn build_corpus(
    name: impl Into<String>,
    documents: Vec<Document>,
    role: Role,
    chunk_len: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<Corpus, CorpusError> {
    if documents.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    if chunk_len < MIN_CHUNK_LEN {
        return Err(CorpusError::ChunkLenTooSmall(chunk_len));
    }
    for d in &documents {
        d.validate()?;
    }
    let chunks = chunk_documents(&documents, tokenizer, chunk_len)?;
    Ok(Corpus {
        name: name.into(),
        role,
        documents,
        chunks,
        chunk_len,
        tokenizer: tokenizer.name().to_string(),
    })
}

/// Fails if any URL appears in both corpora.
pub fn ensure_disjoint(target: &Corpus, safe: &Corpus) -> Result<(), CorpusError> {
    let t = target.urls();
    let shared: Vec<String> = safe
        .urls()
        .intersection(&t)
        .map(|s| s.to_string())
        .collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(CorpusError::Overlap(shared))
    }
}
