//! A local server that answers like `index.commoncrawl.org` and
//! `data.commoncrawl.org` for a fixed set of saved pages.
//!
//! Each crawl gets one gzip-member-per-record WARC file; CDX lookups return
//! the member's offset and length so clients fetch it with a Range request.

use std::collections::HashMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Deserialize;
use tokio::sync::oneshot;

#[derive(Debug, Clone)]
pub struct Page {
    pub url: String,
    /// `YYYYMMDDhhmmss`
    pub timestamp: String,
    pub html: String,
}

#[derive(Debug, Clone)]
pub struct Crawl {
    pub id: String,
    /// ISO start date, e.g. `2024-02-20T00:00:00`.
    pub from: String,
    pub pages: Vec<Page>,
}

/// Read `index.tsv` (`url<TAB>file<TAB>timestamp`) and the HTML files next to it.
pub fn load_pages(index: &Path) -> std::io::Result<Vec<Page>> {
    let dir = index.parent().unwrap_or(Path::new("."));
    let mut pages = Vec::new();
    for line in std::fs::read_to_string(index)?.lines().filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        let [url, file, ts] = cols[..] else {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad index line {line:?}")));
        };
        pages.push(Page {
            url: url.to_string(),
            timestamp: ts.to_string(),
            html: std::fs::read_to_string(dir.join(file))?,
        });
    }
    Ok(pages)
}

/// The crawls served for the fixture pages: the pages themselves in a crawl
/// that started in February 2024, plus a later crawl (April 2024) with
/// altered copies that a `before = 2024-04-01` ingest must never see.
pub fn fixture_crawls(pages: &[Page]) -> Vec<Crawl> {
    let later = pages
        .iter()
        .map(|p| Page {
            url: p.url.clone(),
            timestamp: format!("202404{}", &p.timestamp[6..]),
            html: p.html.replace("</main>", "<p>This page was updated after the cutoff.</p></main>"),
        })
        .collect();
    vec![
        Crawl {
            id: "CC-MAIN-2024-18".into(),
            from: "2024-04-12T00:00:00".into(),
            pages: later,
        },
        Crawl {
            id: "CC-MAIN-2024-10".into(),
            from: "2024-02-20T00:00:00".into(),
            pages: pages.to_vec(),
        },
    ]
}

fn warc_member(page: &Page) -> Vec<u8> {
    let http = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: {}\r\n\r\n{}",
        page.html.len(),
        page.html
    );
    let record = format!(
        "WARC/1.0\r\nWARC-Type: response\r\nWARC-Target-URI: {}\r\nWARC-Date: {}\r\nContent-Type: application/http; msgtype=response\r\nContent-Length: {}\r\n\r\n{}\r\n\r\n",
        page.url,
        page.timestamp,
        http.len(),
        http
    );
    let mut gz = GzEncoder::new(Vec::new(), Compression::default());
    gz.write_all(record.as_bytes()).expect("writing to a Vec cannot fail");
    gz.finish().expect("writing to a Vec cannot fail")
}

struct Entry {
    timestamp: String,
    filename: String,
    offset: usize,
    length: usize,
}

struct Served {
    base: String,
    crawls: Vec<(String, String)>,
    index: HashMap<(String, String), Vec<Entry>>,
    files: HashMap<String, Vec<u8>>,
    /// URLs that answer 500 from the CDX endpoint.
    failing: Vec<String>,
}

fn build(base: &str, crawls: &[Crawl], failing: Vec<String>) -> Served {
    let mut index: HashMap<(String, String), Vec<Entry>> = HashMap::new();
    let mut files = HashMap::new();
    for c in crawls {
        let filename = format!("crawl-data/{}/segments/0/warc/fixture-00000.warc.gz", c.id);
        let mut data = Vec::new();
        for p in &c.pages {
            let member = warc_member(p);
            index.entry((c.id.clone(), p.url.clone())).or_default().push(Entry {
                timestamp: p.timestamp.clone(),
                filename: filename.clone(),
                offset: data.len(),
                length: member.len(),
            });
            data.extend(member);
        }
        files.insert(filename, data);
    }
    Served {
        base: base.to_string(),
        crawls: crawls.iter().map(|c| (c.id.clone(), c.from.clone())).collect(),
        index,
        files,
        failing,
    }
}

async fn collinfo(State(s): State<Arc<Served>>) -> impl IntoResponse {
    let list: Vec<serde_json::Value> = s
        .crawls
        .iter()
        .map(|(id, from)| {
            serde_json::json!({
                "id": id,
                "name": format!("Fixture crawl {id}"),
                "from": from,
                "cdx-api": format!("{}/{id}-index", s.base),
            })
        })
        .collect();
    Json(list)
}

#[derive(Deserialize)]
struct CdxQuery {
    url: String,
    #[serde(default)]
    output: Option<String>,
}

async fn cdx(State(s): State<Arc<Served>>, UrlPath(name): UrlPath<String>, Query(q): Query<CdxQuery>) -> Response {
    let Some(crawl) = name.strip_suffix("-index") else {
        return StatusCode::NOT_FOUND.into_response();
    };
    if s.failing.contains(&q.url) {
        return (StatusCode::INTERNAL_SERVER_ERROR, "fixture failure").into_response();
    }
    if q.output.as_deref() != Some("json") {
        return (StatusCode::BAD_REQUEST, "only output=json is supported").into_response();
    }
    match s.index.get(&(crawl.to_string(), q.url.clone())) {
        None => (StatusCode::NOT_FOUND, "{\"message\": \"No Captures found for: url\"}").into_response(),
        Some(entries) => {
            let body: String = entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "urlkey": q.url,
                        "timestamp": e.timestamp,
                        "url": q.url,
                        "mime": "text/html",
                        "status": "200",
                        "length": e.length.to_string(),
                        "offset": e.offset.to_string(),
                        "filename": e.filename,
                    })
                    .to_string()
                        + "\n"
                })
                .collect();
            body.into_response()
        }
    }
}

fn parse_range(headers: &HeaderMap, len: usize) -> Option<(usize, usize)> {
    let v = headers.get(header::RANGE)?.to_str().ok()?;
    let (a, b) = v.strip_prefix("bytes=")?.split_once('-')?;
    let start: usize = a.parse().ok()?;
    let end: usize = b.parse().ok()?;
    (start <= end && end < len).then_some((start, end))
}

async fn data(State(s): State<Arc<Served>>, UrlPath(file): UrlPath<String>, headers: HeaderMap) -> Response {
    let Some(bytes) = s.files.get(&file) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    match parse_range(&headers, bytes.len()) {
        Some((a, b)) => (StatusCode::PARTIAL_CONTENT, bytes[a..=b].to_vec()).into_response(),
        None => (StatusCode::RANGE_NOT_SATISFIABLE, "range required").into_response(),
    }
}

/// A running server; stops when dropped.
pub struct MockServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    /// Base URL for both the index and the data endpoints.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn index_base(&self) -> String {
        self.base_url()
    }

    pub fn data_base(&self) -> String {
        format!("{}/data", self.base_url())
    }

    /// Block the calling thread until the server stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Serve `crawls` on `port` (0 picks a free port) from a background thread.
pub fn spawn(crawls: Vec<Crawl>, port: u16, failing: Vec<String>) -> std::io::Result<MockServer> {
    let listener = std::net::TcpListener::bind(("127.0.0.1", port))?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let served = Arc::new(build(&format!("http://{addr}"), &crawls, failing));
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("tokio runtime");
        rt.block_on(async move {
            let app = Router::new()
                .route("/collinfo.json", get(collinfo))
                .route("/:name", get(cdx))
                .route("/data/*file", get(data))
                .with_state(served);
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
                .expect("mock server");
        });
    });
    Ok(MockServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
