use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use faqbot_core::dialogue::ConversationContext;
use tokio::sync::Mutex as AsyncMutex;

use crate::ServiceError;

/// Per-user conversation contexts.
///
/// Turns for one user run under that user's lock, so concurrent requests
/// for the same user are applied one after the other. Different users
/// never contend beyond the short map lookup.
#[derive(Debug, Default)]
pub struct ContextStore {
    users: Mutex<HashMap<String, Arc<AsyncMutex<ConversationContext>>>>,
    /// Last committed context of every user, the source of snapshots.
    committed: Mutex<BTreeMap<String, ConversationContext>>,
    snapshot: Option<PathBuf>,
}

impl ContextStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store that rewrites `path` after every turn, seeded from it if present.
    pub fn with_snapshot(path: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let path = path.into();
        let restored = load_snapshot(&path)?;
        let users = restored
            .iter()
            .map(|(k, v)| (k.clone(), Arc::new(AsyncMutex::new(v.clone()))))
            .collect();
        Ok(Self {
            users: Mutex::new(users),
            committed: Mutex::new(restored),
            snapshot: Some(path),
        })
    }

    fn entry(&self, user_id: &str) -> Arc<AsyncMutex<ConversationContext>> {
        let mut users = self.users.lock().expect("store lock poisoned");
        users
            .entry(user_id.to_string())
            .or_insert_with(|| Arc::new(AsyncMutex::new(ConversationContext::new(user_id))))
            .clone()
    }

    /// Runs one turn for `user_id` with exclusive access to its context and
    /// commits the context the turn returns.
    pub async fn turn<R>(
        &self,
        user_id: &str,
        f: impl FnOnce(&ConversationContext) -> (R, ConversationContext),
    ) -> R {
        let entry = self.entry(user_id);
        let mut ctx = entry.lock().await;
        let (out, next) = f(&ctx);
        *ctx = next;
        self.committed
            .lock()
            .expect("store lock poisoned")
            .insert(user_id.to_string(), ctx.clone());
        if let Err(e) = self.flush() {
            log::error!("context snapshot not written: {e}");
        }
        out
    }

    pub async fn get(&self, user_id: &str) -> Option<ConversationContext> {
        let entry = self
            .users
            .lock()
            .expect("store lock poisoned")
            .get(user_id)
            .cloned()?;
        let ctx = entry.lock().await;
        Some(ctx.clone())
    }

    pub fn len(&self) -> usize {
        self.users.lock().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot_path(&self) -> Option<&Path> {
        self.snapshot.as_deref()
    }

    /// Rewrites the snapshot file from the committed contexts. A no-op
    /// without a snapshot path.
    pub fn flush(&self) -> Result<(), ServiceError> {
        let Some(path) = &self.snapshot else {
            return Ok(());
        };
        // Holding the lock across the write keeps concurrent flushes ordered.
        let committed = self.committed.lock().expect("store lock poisoned");
        let json = serde_json::to_string_pretty(&*committed).expect("contexts serialize");
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json)
            .and_then(|_| std::fs::rename(&tmp, path))
            .map_err(|e| ServiceError::Snapshot(format!("{}: {e}", path.display())))
    }
}

fn load_snapshot(path: &Path) -> Result<BTreeMap<String, ConversationContext>, ServiceError> {
    match std::fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map_err(|e| ServiceError::Snapshot(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
        Err(e) => Err(ServiceError::Snapshot(format!("{}: {e}", path.display()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ctx: &ConversationContext, value: &str) -> ((), ConversationContext) {
        ((), ctx.clone().with_context(value))
    }

    #[tokio::test]
    async fn turn_commits_context() {
        let store = ContextStore::new();
        assert!(store.get("u").await.is_none());
        store.turn("u", |c| set(c, "reg_flow")).await;
        assert_eq!(
            store.get("u").await.unwrap().active_context.as_deref(),
            Some("reg_flow")
        );
        assert_eq!(store.len(), 1);
    }

    #[tokio::test]
    async fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contexts.json");
        let store = ContextStore::with_snapshot(&path).unwrap();
        store.turn("a", |c| set(c, "x")).await;
        store.turn("b", |c| set(c, "y")).await;
        drop(store);
        let restored = ContextStore::with_snapshot(&path).unwrap();
        assert_eq!(
            restored.get("a").await.unwrap().active_context.as_deref(),
            Some("x")
        );
        assert_eq!(
            restored.get("b").await.unwrap().active_context.as_deref(),
            Some("y")
        );
    }

    #[test]
    fn corrupt_snapshot_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contexts.json");
        std::fs::write(&path, "not json").unwrap();
        assert!(matches!(
            ContextStore::with_snapshot(&path),
            Err(ServiceError::Snapshot(_))
        ));
    }
}
