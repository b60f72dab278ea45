//! Client for the public CommonCrawl CDX index and WARC data endpoints.
//!
//! Only [`IndexClient::lookup_captures`] and [`IndexClient::fetch_document`]
//! touch the network; the rest of the toolkit works from persisted corpora.

use std::io::Read;
use std::time::Duration;

use chrono::{NaiveDate, NaiveDateTime, Utc};
use flate2::read::MultiGzDecoder;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use url::Url;

use super::{clean_html, CorpusError, Document};

pub const DEFAULT_INDEX_BASE: &str = "https://index.commoncrawl.org";
pub const DEFAULT_DATA_BASE: &str = "https://data.commoncrawl.org";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexConfig {
    pub index_base: String,
    pub data_base: String,
    /// Number of eligible crawls (newest first) to query per URL.
    pub max_crawls: usize,
    /// Keep querying older crawls after one returned captures.
    pub exhaustive: bool,
    pub timeout_secs: u64,
    pub user_agent: String,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            index_base: DEFAULT_INDEX_BASE.into(),
            data_base: DEFAULT_DATA_BASE.into(),
            max_crawls: 6,
            exhaustive: false,
            timeout_secs: 60,
            user_agent: concat!("govaudit/", env!("CARGO_PKG_VERSION")).into(),
        }
    }
}

/// One crawl collection as listed by `collinfo.json`.
#[derive(Debug, Clone, Deserialize)]
pub struct CrawlInfo {
    pub id: String,
    #[serde(rename = "cdx-api")]
    pub cdx_api: String,
    #[serde(default)]
    pub from: Option<String>,
}

impl CrawlInfo {
    /// Start of the crawl: the `from` field when present, otherwise the
    /// Monday of the ISO week encoded in `CC-MAIN-YYYY-WW`.
    pub fn start_date(&self) -> Option<NaiveDate> {
        if let Some(from) = &self.from {
            if let Some(d) = from.get(..10).and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()) {
                return Some(d);
            }
        }
        let mut parts = self.id.strip_prefix("CC-MAIN-")?.split('-');
        let year: i32 = parts.next()?.parse().ok()?;
        let week: u32 = parts.next()?.parse().ok()?;
        NaiveDate::from_isoywd_opt(year, week, chrono::Weekday::Mon)
    }
}

/// Location of one archived response inside a WARC file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capture {
    pub url: String,
    pub crawl_id: String,
    /// `YYYYMMDDhhmmss`
    pub timestamp: String,
    pub filename: String,
    pub offset: u64,
    pub length: u64,
    #[serde(default)]
    pub status: Option<String>,
    #[serde(default)]
    pub mime: Option<String>,
}

impl Capture {
    pub fn captured_at(&self) -> Option<NaiveDateTime> {
        NaiveDateTime::parse_from_str(&self.timestamp, "%Y%m%d%H%M%S").ok()
    }
}

#[derive(Deserialize)]
struct CdxRecord {
    url: String,
    timestamp: String,
    filename: String,
    offset: String,
    length: String,
    #[serde(default)]
    status: Option<String>,
    #[serde(default)]
    mime: Option<String>,
}

pub struct IndexClient {
    config: IndexConfig,
    http: Client,
}

fn net(e: reqwest::Error) -> CorpusError {
    CorpusError::Network(e.to_string())
}

impl IndexClient {
    pub fn new(config: IndexConfig) -> Result<Self, CorpusError> {
        let http = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .user_agent(config.user_agent.clone())
            .build()
            .map_err(net)?;
        Ok(IndexClient { config, http })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn crawls(&self) -> Result<Vec<CrawlInfo>, CorpusError> {
        let url = format!("{}/collinfo.json", self.config.index_base.trim_end_matches('/'));
        let resp = self.http.get(&url).send().map_err(net)?;
        let resp = check_status(&url, resp)?;
        resp.json::<Vec<CrawlInfo>>().map_err(|e| CorpusError::Protocol {
            url,
            reason: e.to_string(),
        })
    }

    /// Captures of `url` taken strictly before `before`, newest first.
    pub fn lookup_captures(&self, url: &str, before: NaiveDate) -> Result<Vec<Capture>, CorpusError> {
        match Url::parse(url) {
            Ok(u) if u.has_host() => {}
            _ => return Err(CorpusError::InvalidUrl(url.to_string())),
        }
        let cutoff = before.and_hms_opt(0, 0, 0).expect("midnight exists");
        let mut crawls: Vec<(NaiveDate, CrawlInfo)> = self
            .crawls()?
            .into_iter()
            .filter_map(|c| c.start_date().map(|d| (d, c)))
            .filter(|(d, _)| *d < before)
            .collect();
        crawls.sort_by(|a, b| b.0.cmp(&a.0));

        let mut captures = Vec::new();
        for (_, crawl) in crawls.into_iter().take(self.config.max_crawls) {
            let found: Vec<Capture> = self
                .query_crawl(&crawl, url)?
                .into_iter()
                .filter(|c| c.captured_at().is_some_and(|t| t < cutoff))
                .collect();
            let hit = !found.is_empty();
            captures.extend(found);
            if hit && !self.config.exhaustive {
                break;
            }
        }
        captures.sort_by(|a, b| b.timestamp.cmp(&a.timestamp));
        Ok(captures)
    }

    fn query_crawl(&self, crawl: &CrawlInfo, url: &str) -> Result<Vec<Capture>, CorpusError> {
        let resp = self
            .http
            .get(&crawl.cdx_api)
            .query(&[("url", url), ("output", "json")])
            .send()
            .map_err(net)?;
        // The CDX server answers 404 "No Captures found" for unindexed URLs.
        if resp.status() == StatusCode::NOT_FOUND {
            return Ok(Vec::new());
        }
        let resp = check_status(&crawl.cdx_api, resp)?;
        let body = resp.text().map_err(net)?;
        let mut out = Vec::new();
        for line in body.lines().filter(|l| !l.trim().is_empty()) {
            let rec: CdxRecord = serde_json::from_str(line).map_err(|e| CorpusError::Protocol {
                url: crawl.cdx_api.clone(),
                reason: format!("bad CDX record: {e}"),
            })?;
            let parse = |v: &str| {
                v.parse::<u64>().map_err(|e| CorpusError::Protocol {
                    url: crawl.cdx_api.clone(),
                    reason: format!("bad offset/length {v:?}: {e}"),
                })
            };
            out.push(Capture {
                url: rec.url,
                crawl_id: crawl.id.clone(),
                timestamp: rec.timestamp,
                offset: parse(&rec.offset)?,
                length: parse(&rec.length)?,
                filename: rec.filename,
                status: rec.status,
                mime: rec.mime,
            });
        }
        Ok(out)
    }

    /// Download one capture's WARC record and clean its HTML payload.
    pub fn fetch_document(&self, capture: &Capture, topic: &str) -> Result<Document, CorpusError> {
        if capture.length == 0 {
            return Err(CorpusError::EmptyCapture);
        }
        let url = format!(
            "{}/{}",
            self.config.data_base.trim_end_matches('/'),
            capture.filename.trim_start_matches('/')
        );
        let range = format!(
            "bytes={}-{}",
            capture.offset,
            capture.offset + capture.length - 1
        );
        let resp = self
            .http
            .get(&url)
            .header(reqwest::header::RANGE, range)
            .send()
            .map_err(net)?;
        let resp = check_status(&url, resp)?;
        let bytes = resp.bytes().map_err(net)?;
        let html = warc_html_payload(&bytes)?;
        if html.trim().is_empty() {
            return Err(CorpusError::EmptyCapture);
        }
        let text = clean_html(&html)?;
        Ok(Document::new(&capture.url, text, topic, &capture.crawl_id, Utc::now())?.with_raw_html(html))
    }
}

fn check_status(
    url: &str,
    resp: reqwest::blocking::Response,
) -> Result<reqwest::blocking::Response, CorpusError> {
    let status = resp.status();
    if status.is_success() {
        Ok(resp)
    } else if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
        Err(CorpusError::Network(format!("{url}: HTTP {status}")))
    } else {
        Err(CorpusError::Protocol {
            url: url.to_string(),
            reason: format!("HTTP {status}"),
        })
    }
}

fn split_headers(data: &[u8]) -> Option<(&[u8], &[u8])> {
    let pos = data.windows(4).position(|w| w == b"\r\n\r\n")?;
    Some((&data[..pos], &data[pos + 4..]))
}

/// Extract the HTTP body from a (possibly gzip-compressed) WARC response
/// record.
pub fn warc_html_payload(raw: &[u8]) -> Result<String, CorpusError> {
    let mut data = Vec::new();
    if raw.starts_with(&[0x1f, 0x8b]) {
        MultiGzDecoder::new(raw)
            .read_to_end(&mut data)
            .map_err(|e| CorpusError::Protocol {
                url: String::new(),
                reason: format!("gzip: {e}"),
            })?;
    } else {
        data.extend_from_slice(raw);
    }
    let bad = |reason: &str| CorpusError::Protocol {
        url: String::new(),
        reason: reason.to_string(),
    };
    if !data.starts_with(b"WARC/") {
        return Err(bad("not a WARC record"));
    }
    let (warc_headers, rest) = split_headers(&data).ok_or_else(|| bad("truncated WARC headers"))?;
    let warc_headers = String::from_utf8_lossy(warc_headers);
    let content_length = warc_headers
        .lines()
        .find_map(|l| {
            let (k, v) = l.split_once(':')?;
            k.trim()
                .eq_ignore_ascii_case("Content-Length")
                .then(|| v.trim().parse::<usize>().ok())?
        })
        .unwrap_or(rest.len())
        .min(rest.len());
    let block = &rest[..content_length];
    let body = match split_headers(block) {
        Some((http_head, body)) if http_head.starts_with(b"HTTP/") => body,
        _ => return Err(bad("WARC block is not an HTTP response")),
    };
    Ok(String::from_utf8_lossy(body).into_owned())
}
