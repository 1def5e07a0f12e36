use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use super::message::{Answer, MsgId, TraceMessage};

pub type SessionId = u64;

#[derive(Default)]
struct Inner {
    answers: HashMap<String, Answer>,
    /// Per session: apply message id -> key of the question asked there.
    recorded: HashMap<SessionId, BTreeMap<MsgId, String>>,
}

/// Global store of answers to `apply` questions, keyed by the question's
/// canonical text. Safe to share between concurrently running sessions;
/// every operation is atomic.
#[derive(Default)]
pub struct MemoryStore {
    inner: Mutex<Inner>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn record(&self, key: &str, answer: Answer) {
        self.lock().answers.insert(key.to_string(), answer);
    }

    /// Records `answer` and remembers that the question was asked at `id`.
    pub fn record_at(&self, session: SessionId, id: MsgId, key: &str, answer: Answer) {
        let mut inner = self.lock();
        inner.answers.insert(key.to_string(), answer);
        inner
            .recorded
            .entry(session)
            .or_default()
            .insert(id, key.to_string());
    }

    /// Remembers that `key` was answered (from memory) at `id`, so a later
    /// invalidation of an enclosing subtree also drops it.
    pub fn associate(&self, session: SessionId, id: MsgId, key: &str) {
        self.lock()
            .recorded
            .entry(session)
            .or_default()
            .insert(id, key.to_string());
    }

    pub fn lookup(&self, key: &str) -> Option<Answer> {
        self.lock().answers.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.lock().answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Removes the answers recorded at `target` and at every descendant of
    /// `target` in `session`, following `parent_of`. Returns the removed keys.
    pub fn invalidate_subtree(
        &self,
        session: SessionId,
        target: MsgId,
        parent_of: impl Fn(MsgId) -> Option<MsgId>,
    ) -> Vec<String> {
        let mut inner = self.lock();
        let Some(recorded) = inner.recorded.get_mut(&session) else {
            return Vec::new();
        };
        let doomed: Vec<MsgId> = recorded
            .range(target..)
            .map(|(&id, _)| id)
            .filter(|&id| {
                let mut cur = Some(id);
                while let Some(c) = cur {
                    if c == target {
                        return true;
                    }
                    if c < target {
                        return false;
                    }
                    cur = parent_of(c);
                }
                false
            })
            .collect();
        let keys: Vec<String> = doomed
            .iter()
            .filter_map(|id| recorded.remove(id))
            .collect();
        for k in &keys {
            inner.answers.remove(k);
        }
        keys
    }

    /// [`invalidate_subtree`](Self::invalidate_subtree) with parent pointers
    /// taken from a session's message list.
    pub fn invalidate_subtree_in(
        &self,
        session: SessionId,
        target: MsgId,
        trace: &[TraceMessage],
    ) -> Vec<String> {
        let parents: HashMap<MsgId, Option<MsgId>> =
            trace.iter().map(|m| (m.id, m.parent)).collect();
        self.invalidate_subtree(session, target, |id| parents.get(&id).copied().flatten())
    }

    pub fn clear(&self) {
        let mut inner = self.lock();
        inner.answers.clear();
        inner.recorded.clear();
    }

    /// Drops the id bookkeeping for a session; recorded answers stay.
    pub fn forget_session(&self, session: SessionId) {
        self.lock().recorded.remove(&session);
    }
}
