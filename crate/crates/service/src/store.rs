use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Instant;

use tokio::sync::watch;

use crate::session::{ServiceConfig, Session};

/// One live session plus the wake-up channel of its event stream.
pub struct SessionHandle {
    session: Mutex<Session>,
    latest: watch::Sender<u64>,
    last_active: Mutex<Instant>,
    closed: AtomicBool,
}

impl SessionHandle {
    fn new(session: Session) -> Self {
        let (latest, _) = watch::channel(session.sequence());
        Self {
            session: Mutex::new(session),
            latest,
            last_active: Mutex::new(Instant::now()),
            closed: AtomicBool::new(false),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, Session> {
        *self.last_active.lock().expect("clock lock") = Instant::now();
        self.session.lock().expect("session lock")
    }

    /// Wakes stream consumers after new events were appended.
    pub fn publish(&self, sequence: u64) {
        self.latest.send_replace(sequence);
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.latest.subscribe()
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }

    fn close(&self) {
        self.closed.store(true, Ordering::SeqCst);
        self.latest.send_modify(|_| {});
    }

    fn idle_since(&self) -> Instant {
        *self.last_active.lock().expect("clock lock")
    }
}

/// In-memory session table.
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    pub config: ServiceConfig,
}

impl SessionStore {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            config,
        }
    }

    pub fn new_id() -> String {
        format!("{:032x}", rand::random::<u128>())
    }

    pub fn insert(&self, session: Session) -> Arc<SessionHandle> {
        let id = session.id().to_string();
        let handle = Arc::new(SessionHandle::new(session));
        self.sessions
            .write()
            .expect("store lock")
            .insert(id, handle.clone());
        handle
    }

    pub fn get(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.read().expect("store lock").get(id).cloned()
    }

    pub fn remove(&self, id: &str) -> bool {
        let removed = self.sessions.write().expect("store lock").remove(id);
        if let Some(h) = &removed {
            h.close();
        }
        removed.is_some()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle for longer than the configured timeout at `now`.
    /// Returns how many were dropped.
    pub fn expire_idle(&self, now: Instant) -> usize {
        let timeout = self.config.idle_timeout;
        let stale: Vec<String> = self
            .sessions
            .read()
            .expect("store lock")
            .iter()
            .filter(|(_, h)| now.saturating_duration_since(h.idle_since()) > timeout)
            .map(|(id, _)| id.clone())
            .collect();
        for id in &stale {
            self.remove(id);
        }
        stale.len()
    }
}
