use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use url::Url;

use super::CorpusError;

fn tag_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[a-zA-Z/]").expect("static regex"))
}

/// True when `text` contains something that looks like an HTML tag opener.
pub fn contains_markup(text: &str) -> bool {
    tag_regex().is_match(text)
}

/// A cleaned plaintext web page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub url: String,
    pub retrieved_at: DateTime<Utc>,
    /// CommonCrawl crawl label; empty for pages read from local files.
    #[serde(default)]
    pub crawl_id: String,
    #[serde(default)]
    pub topic: String,
    pub text: String,
    #[serde(skip)]
    pub raw_html: Option<String>,
}

impl Document {
    pub fn new(
        url: impl Into<String>,
        text: impl Into<String>,
        topic: impl Into<String>,
        crawl_id: impl Into<String>,
        retrieved_at: DateTime<Utc>,
    ) -> Result<Self, CorpusError> {
        let doc = Document {
            url: url.into(),
            retrieved_at,
            crawl_id: crawl_id.into(),
            topic: topic.into(),
            text: text.into(),
            raw_html: None,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn with_raw_html(mut self, html: impl Into<String>) -> Self {
        self.raw_html = Some(html.into());
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        match Url::parse(&self.url) {
            Ok(u) if u.has_host() => {}
            _ => return Err(CorpusError::InvalidUrl(self.url.clone())),
        }
        if self.text.trim().is_empty() {
            return Err(CorpusError::InvalidDocument {
                url: self.url.clone(),
                reason: "empty text".into(),
            });
        }
        if contains_markup(&self.text) {
            return Err(CorpusError::InvalidDocument {
                url: self.url.clone(),
                reason: "text contains HTML markup".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn now() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2024-03-01T00:00:00Z")
            .unwrap()
            .with_timezone(&Utc)
    }

    #[test]
    fn rejects_relative_url() {
        let err = Document::new("/universal-credit", "text", "", "", now()).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidUrl(_)));
    }

    #[test]
    fn rejects_markup_and_empty_text() {
        let url = "https://www.gov.uk/child-benefit";
        assert!(Document::new(url, "  \n", "", "", now()).is_err());
        assert!(Document::new(url, "a <p>b", "", "", now()).is_err());
        assert!(Document::new(url, "income < 50000", "", "", now()).is_ok());
    }
}
