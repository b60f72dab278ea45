//! Blinded annotation service. Responses are handed out one at a time
//! without their phase or model; codes are checked against the coding
//! framework and appended to a line-delimited log that is replayed on
//! restart and exported, unblinded, for tallying.

pub mod api;
pub mod session;
pub mod store;
pub mod tasks;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use tokio::sync::oneshot;

pub use api::{router, AppState, TOKEN_ENV};
pub use session::{Session, SessionState, Submission, SubmitOutcome, DEFAULT_LEASE};
pub use store::Event;
pub use tasks::{build_tasks, TaskPayload, TaskRecord, TaskStatus};

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("invalid code {0:?}")]
    InvalidCode(String),
    #[error("task already coded differently")]
    Conflict(Box<Submission>),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("{path}:{line}: {reason}")]
    Store { path: String, line: usize, reason: String },
    #[error(transparent)]
    Eval(#[from] govaudit_core::evalkit::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A server running on a background thread; stops when dropped.
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl RunningServer {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Serve on `addr` (port 0 picks a free port) from a background thread.
pub fn spawn(state: Arc<AppState>, ui_dir: Option<PathBuf>, addr: SocketAddr) -> std::io::Result<RunningServer> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener)?;
            axum::serve(listener, router(state, ui_dir))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    });
    Ok(RunningServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Serve on the calling thread until Ctrl-C. `ready` is called with the
/// bound address before the first request is accepted.
pub fn serve_blocking(
    state: Arc<AppState>,
    ui_dir: Option<PathBuf>,
    addr: SocketAddr,
    ready: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        ready(listener.local_addr()?);
        axum::serve(listener, router(state, ui_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}
