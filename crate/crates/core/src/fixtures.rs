//! Paths to the fixtures shipped with the crate (saved pages, queries,
//! ground-truth statistics, the study prevalence table) and helpers
//! that turn the saved pages into documents without touching the network.

use std::path::{Path, PathBuf};

use chrono::{NaiveDateTime, TimeZone, Utc};

use crate::corpus::ingest::read_url_list;
use crate::corpus::{clean_html, read_documents, CorpusError, Document};

/// Crawl label given to documents built from the saved pages.
pub const FIXTURE_CRAWL: &str = "CC-MAIN-2024-10";

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn path(rel: &str) -> PathBuf {
    dir().join(rel)
}

/// One saved page listed in `pages/index.tsv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SavedPage {
    pub url: String,
    pub file: PathBuf,
    /// `YYYYMMDDhhmmss`
    pub timestamp: String,
}

pub fn page_index(index: &Path) -> Result<Vec<SavedPage>, CorpusError> {
    let dir = index.parent().unwrap_or(Path::new("."));
    std::fs::read_to_string(index)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols[..] {
                [url, file, ts] => Ok(SavedPage {
                    url: url.to_string(),
                    file: dir.join(file),
                    timestamp: ts.to_string(),
                }),
                _ => Err(CorpusError::Protocol {
                    url: index.display().to_string(),
                    reason: format!("bad index line {line:?}"),
                }),
            }
        })
        .collect()
}

/// Topic tags from `target_urls.tsv`, keyed by URL.
pub fn target_topics() -> Result<Vec<(String, String)>, CorpusError> {
    Ok(read_url_list(&path("target_urls.tsv"))?
        .into_iter()
        .map(|e| (e.url, e.topic))
        .collect())
}

/// Clean every saved page into a document, in `target_urls.tsv` order.
pub fn target_documents() -> Result<Vec<Document>, CorpusError> {
    let pages = page_index(&path("pages/index.tsv"))?;
    target_topics()?
        .into_iter()
        .map(|(url, topic)| {
            let page = pages.iter().find(|p| p.url == url).ok_or_else(|| CorpusError::Protocol {
                url: url.clone(),
                reason: "no saved page".into(),
            })?;
            let html = std::fs::read_to_string(&page.file)?;
            let at = NaiveDateTime::parse_from_str(&page.timestamp, "%Y%m%d%H%M%S").map_err(|e| {
                CorpusError::Protocol {
                    url: url.clone(),
                    reason: format!("bad timestamp: {e}"),
                }
            })?;
            Document::new(&url, clean_html(&html)?, topic, FIXTURE_CRAWL, Utc.from_utc_datetime(&at))
        })
        .collect()
}

pub fn safe_documents() -> Result<Vec<Document>, CorpusError> {
    read_documents(&path("safe.docs.jsonl"))
}
