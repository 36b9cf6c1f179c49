//! HTTP front end: the collection/sync endpoints used by placement and
//! preview clients, and the annotation API used by the researcher console.
//!
//! All bodies are JSON. Errors carry `{error_code, message}`.

// Error enums carry the offending keys for diagnostics; boxing them buys nothing here.
#![allow(clippy::result_large_err)]

pub mod api;
pub mod error;
pub mod sync;

use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post, put};
use axum::Router;
use layoutminer_core::Store;
use tokio::net::TcpListener;
use tokio::sync::oneshot;

pub use api::AppState;
pub use error::{ApiError, ErrorBody};
pub use sync::{ClientRole, SessionContext, SyncError, SyncService};

/// Screenshots arrive base64-encoded inside JSON.
const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

pub fn router(state: AppState) -> Router {
    let scenario = "/scenarios/{participant}/{environment}/{task}";
    Router::new()
        .route("/health", get(api::health))
        .route("/blobs/{hash}", get(api::get_blob))
        .route(
            "/scenarios",
            post(api::create_scenario).get(api::list_scenarios),
        )
        .route("/screenshots", post(api::create_screenshot))
        .route("/screenshots/{id}", get(api::get_screenshot))
        .route(
            "/screenshots/{id}/widgets",
            get(api::list_screenshot_widgets),
        )
        .route("/widgets", post(api::create_widget))
        .route("/widgets/{id}", get(api::get_widget))
        .route(&format!("{scenario}/events"), post(api::post_event))
        .route(&format!("{scenario}/changes"), get(api::get_changes))
        .route(&format!("{scenario}/layout"), get(api::get_layout))
        .route(
            &format!("{scenario}/pose_samples"),
            post(api::post_pose_sample).get(api::get_pose_samples),
        )
        .route(&format!("{scenario}/scene"), get(api::get_scene))
        .route(&format!("{scenario}/history"), get(api::get_history))
        .route("/api/widgets", get(api::api_widgets))
        .route(
            "/api/widgets/{id}/annotation",
            put(api::put_annotation).get(api::get_annotation),
        )
        .route("/api/suggest", get(api::api_suggest))
        .route("/api/summary", get(api::api_summary))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    store: Arc<Store>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    let app = router(AppState::new(store));
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server running on its own runtime thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t
                .join()
                .unwrap_or_else(|_| Err(io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub fn spawn_background(store: Arc<Store>, addr: SocketAddr) -> io::Result<ServerHandle> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = thread::Builder::new()
        .name("layoutminer-server".into())
        .spawn(move || {
            runtime.block_on(serve(listener, store, async {
                let _ = rx.await;
            }))
        })?;
    Ok(ServerHandle {
        addr,
        stop: Some(tx),
        thread: Some(thread),
    })
}
