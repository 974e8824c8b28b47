//! HTTP session service for the optical bench.
//!
//! Every session owns a mutable copy of a scene, a seeded shot counter and
//! an append-only event log. Commands on a session run in arrival order; the
//! log is streamed as server-sent events and can be resumed by sequence
//! number.

pub mod api;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

pub use api::{router, ApiError, AppState};
pub use session::{
    fold_counts, replay, Command, EventBody, ServiceConfig, Session, SessionEvent, SessionLog,
    SessionState, StreamEvent, API_VERSION,
};
pub use store::{SessionHandle, SessionStore};

/// Serves until interrupted, sweeping idle sessions in the background.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let store = Arc::new(SessionStore::new(config));
    let sweeper = store.clone();
    let period =
        (store.config.idle_timeout / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.expire_idle(Instant::now());
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
