//! Concurrent ingestion of an explicit URL list through the index client.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use url::Url;

use super::commoncrawl::{Capture, IndexClient};
use super::{CorpusError, Document};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlEntry {
    pub url: String,
    pub topic: String,
}

/// Parse a URL list: one URL per line, optionally followed by a tab and a
/// topic tag. Blank lines and `#` comments are ignored.
pub fn parse_url_list(text: &str) -> Vec<UrlEntry> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| match l.split_once('\t') {
            Some((u, t)) => UrlEntry {
                url: u.trim().to_string(),
                topic: t.trim().to_string(),
            },
            None => UrlEntry {
                url: l.to_string(),
                topic: String::new(),
            },
        })
        .collect()
}

pub fn read_url_list(path: &Path) -> Result<Vec<UrlEntry>, CorpusError> {
    Ok(parse_url_list(&std::fs::read_to_string(path)?))
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub before: NaiveDate,
    pub parallelism: usize,
    /// Minimum spacing between two requests to the same host.
    pub host_delay: Duration,
    /// Extra attempts after a retriable failure.
    pub retries: usize,
}

impl IngestOptions {
    pub fn new(before: NaiveDate) -> Self {
        IngestOptions {
            before,
            parallelism: 4,
            host_delay: Duration::from_millis(500),
            retries: 2,
        }
    }
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub entry: UrlEntry,
    pub capture: Option<Capture>,
    pub result: Result<Document, CorpusError>,
}

struct Politeness {
    delay: Duration,
    last: Mutex<HashMap<String, Instant>>,
}

impl Politeness {
    fn wait(&self, url: &str) {
        let host = Url::parse(url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
            .unwrap_or_default();
        let sleep_for = {
            let mut last = self.last.lock().expect("politeness lock");
            let now = Instant::now();
            let slot = last.entry(host).or_insert(now - self.delay);
            let ready = *slot + self.delay;
            let wait = ready.saturating_duration_since(now);
            *slot = now.max(ready);
            wait
        };
        if !sleep_for.is_zero() {
            thread::sleep(sleep_for);
        }
    }
}

fn with_retries<T>(
    retries: usize,
    mut f: impl FnMut() -> Result<T, CorpusError>,
) -> Result<T, CorpusError> {
    let mut attempt = 0;
    loop {
        match f() {
            Err(e) if e.is_retriable() && attempt < retries => {
                attempt += 1;
                thread::sleep(Duration::from_millis(200 * attempt as u64));
            }
            other => return other,
        }
    }
}

fn ingest_one(
    client: &IndexClient,
    entry: &UrlEntry,
    opts: &IngestOptions,
    polite: &Politeness,
) -> IngestOutcome {
    let index_host = client.config().index_base.clone();
    let data_host = client.config().data_base.clone();
    let captures = with_retries(opts.retries, || {
        polite.wait(&index_host);
        client.lookup_captures(&entry.url, opts.before)
    });
    let capture = match captures {
        Ok(c) => c.into_iter().next(),
        Err(e) => {
            return IngestOutcome {
                entry: entry.clone(),
                capture: None,
                result: Err(e),
            }
        }
    };
    let Some(capture) = capture else {
        return IngestOutcome {
            entry: entry.clone(),
            capture: None,
            result: Err(CorpusError::Protocol {
                url: entry.url.clone(),
                reason: format!("no captures before {}", opts.before),
            }),
        };
    };
    let result = with_retries(opts.retries, || {
        polite.wait(&data_host);
        client.fetch_document(&capture, &entry.topic)
    });
    IngestOutcome {
        entry: entry.clone(),
        capture: Some(capture),
        result,
    }
}

/// Fetch the newest pre-cutoff capture of every URL. Results come back in
/// input order regardless of completion order.
pub fn ingest_urls(
    client: &IndexClient,
    entries: &[UrlEntry],
    opts: &IngestOptions,
) -> Vec<IngestOutcome> {
    let polite = Politeness {
        delay: opts.host_delay,
        last: Mutex::new(HashMap::new()),
    };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<IngestOutcome>>> =
        Mutex::new((0..entries.len()).map(|_| None).collect());
    let workers = opts.parallelism.max(1).min(entries.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= entries.len() {
                    break;
                }
                let out = ingest_one(client, &entries[i], opts, &polite);
                results.lock().expect("results lock")[i] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|o| o.expect("every entry processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_list_with_topics() {
        let list = "# target pages\nhttps://www.gov.uk/child-benefit\tChild Benefit\n\nhttps://www.gov.uk/carers-allowance\n";
        let e = parse_url_list(list);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].topic, "Child Benefit");
        assert_eq!(e[1].topic, "");
    }
}
