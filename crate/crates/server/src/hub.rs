//! Shared registry of sessions for the socket transport.
//!
//! Each session sits behind its own async mutex, so events for one session
//! are applied strictly in arrival order while different sessions proceed
//! independently. Outbound messages are pushed to per-connection queues
//! while the lock is held, which gives every client the same delta order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, RwLock};

use msc_core::{Error, Result, SelectionSet};
use tokio::sync::{mpsc as tmpsc, Mutex};

use crate::session::{ClientId, Message, SelectionChange, Session};

pub type Outbox = tmpsc::UnboundedSender<Message>;

struct Shared {
    session: Session,
    outboxes: HashMap<ClientId, Outbox>,
}

impl Shared {
    fn deliver(&mut self, out: Vec<(ClientId, Message)>) {
        for (client, msg) in out {
            if let Some(tx) = self.outboxes.get(&client) {
                // A closed queue means the connection is going away; its
                // reader will detach it.
                let _ = tx.send(msg);
            }
        }
    }
}

pub struct SessionHandle {
    id: String,
    shared: Mutex<Shared>,
}

impl SessionHandle {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub async fn attach(&self, client: ClientId, outbox: Outbox) {
        self.shared.lock().await.outboxes.insert(client, outbox);
    }

    pub async fn detach(&self, client: ClientId) {
        let mut s = self.shared.lock().await;
        s.outboxes.remove(&client);
        s.session.disconnect(client);
    }

    /// Feeds one inbound message through the session and queues the results.
    pub async fn dispatch(&self, client: ClientId, msg: Message) {
        let mut s = self.shared.lock().await;
        let out = s.session.handle_message(client, msg);
        s.deliver(out);
    }

    pub async fn set_selection(&self, view: &str, selection: SelectionSet) -> Result<()> {
        let mut s = self.shared.lock().await;
        let out = s.session.set_selection(view, selection)?;
        s.deliver(out);
        Ok(())
    }

    pub async fn query_select(&self, view: &str, raw: &[i64]) -> Result<()> {
        let mut s = self.shared.lock().await;
        let out = s.session.query_select(view, raw)?;
        s.deliver(out);
        Ok(())
    }

    pub async fn selection(&self, view: &str) -> Result<SelectionSet> {
        self.shared.lock().await.session.selection(view).cloned()
    }

    pub async fn observe_selection(&self) -> mpsc::Receiver<SelectionChange> {
        self.shared.lock().await.session.observe_selection()
    }

    pub async fn client_count(&self) -> usize {
        self.shared.lock().await.session.client_count()
    }

    /// Runs `f` with exclusive access to the session.
    pub async fn with_session<R>(&self, f: impl FnOnce(&Session) -> R) -> R {
        f(&self.shared.lock().await.session)
    }
}

#[derive(Default)]
pub struct Hub {
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    next_client: AtomicU64,
}

impl Hub {
    pub fn new() -> Self {
        Hub::default()
    }

    pub fn add_session(&self, session: Session) -> Result<Arc<SessionHandle>> {
        let mut map = self.sessions.write().expect("session map poisoned");
        let id = session.id().to_owned();
        if map.contains_key(&id) {
            return Err(Error::Config(format!("session `{id}` already exists")));
        }
        let handle = Arc::new(SessionHandle {
            id: id.clone(),
            shared: Mutex::new(Shared {
                session,
                outboxes: HashMap::new(),
            }),
        });
        map.insert(id, handle.clone());
        Ok(handle)
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.read().expect("session map poisoned").get(id).cloned()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session map poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn next_client_id(&self) -> ClientId {
        self.next_client.fetch_add(1, Ordering::Relaxed) + 1
    }
}
