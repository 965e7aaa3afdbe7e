//! Directory-backed persistence for contexts and sessions.
//!
//! Layout:
//!
//! ```text
//! <root>/contexts/<id>.cxt     context payload, never rewritten
//! <root>/contexts/<id>.json    lineage metadata
//! <root>/sessions/<id>.json    session metadata
//! <root>/sessions/<id>.jsonl   session event log
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

use implicheck::io::{parse_cxt, write_cxt};
use implicheck::session::{parse_jsonl, Session, SessionConfig};
use implicheck::{CandidateObject, CanonicalBase, FormalContext, ObjectId};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum StoreError {
    NotFound { kind: &'static str, id: String },
    /// The session's snapshot is no longer the head of its lineage.
    RebaseRequired { head: String },
    Core(implicheck::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for StoreError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StoreError::NotFound { kind, id } => write!(f, "unknown {kind} `{id}`"),
            StoreError::RebaseRequired { head } => {
                write!(f, "the context changed since this session opened; rebase onto `{head}`")
            }
            StoreError::Core(e) => e.fmt(f),
            StoreError::Io(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for StoreError {}

impl From<implicheck::Error> for StoreError {
    fn from(e: implicheck::Error) -> Self {
        StoreError::Core(e)
    }
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Io(e)
    }
}

pub type StoreResult<T> = Result<T, StoreError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextMeta {
    pub id: String,
    /// Id of the first version of this table.
    pub lineage: String,
    pub version: u64,
    pub parent: Option<String>,
}

#[derive(Debug, Clone)]
pub struct StoredContext {
    pub meta: ContextMeta,
    pub context: Arc<FormalContext>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionMeta {
    id: String,
    context_id: String,
}

#[derive(Debug, Clone)]
pub enum BaseJob {
    Running { started: Instant },
    Done(Arc<CanonicalBase>),
    BudgetExceeded { pseudo_intents: usize },
}

struct StoredSession {
    context_id: String,
    session: Session,
}

#[derive(Default)]
struct Inner {
    contexts: BTreeMap<String, StoredContext>,
    sessions: HashMap<String, StoredSession>,
    next_id: u64,
}

pub struct Store {
    root: PathBuf,
    inner: Mutex<Inner>,
    base_jobs: Mutex<HashMap<String, BaseJob>>,
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().expect("store paths have a parent");
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn id_number(id: &str) -> u64 {
    id[1..].parse().unwrap_or(0)
}

impl Store {
    /// Opens `root`, creating it if needed, and reloads everything in it.
    /// Sessions are rebuilt by replaying their logs.
    pub fn open(root: impl Into<PathBuf>) -> StoreResult<Store> {
        let root = root.into();
        fs::create_dir_all(root.join("contexts"))?;
        fs::create_dir_all(root.join("sessions"))?;
        let mut inner = Inner::default();
        for entry in fs::read_dir(root.join("contexts"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let meta: ContextMeta =
                    serde_json::from_str(&fs::read_to_string(&path)?).map_err(implicheck::Error::from)?;
                let context = parse_cxt(&fs::read_to_string(path.with_extension("cxt"))?)?;
                inner.next_id = inner.next_id.max(id_number(&meta.id));
                inner.contexts.insert(
                    meta.id.clone(),
                    StoredContext {
                        meta,
                        context: Arc::new(context),
                    },
                );
            }
        }
        for entry in fs::read_dir(root.join("sessions"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let meta: SessionMeta =
                    serde_json::from_str(&fs::read_to_string(&path)?).map_err(implicheck::Error::from)?;
                let log = parse_jsonl(&fs::read_to_string(path.with_extension("jsonl"))?)?;
                let session = Session::replay(&log)?;
                inner.next_id = inner.next_id.max(id_number(&meta.id));
                inner.sessions.insert(
                    meta.id,
                    StoredSession {
                        context_id: meta.context_id,
                        session,
                    },
                );
            }
        }
        Ok(Store {
            root,
            inner: Mutex::new(inner),
            base_jobs: Mutex::new(HashMap::new()),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn fresh_id(inner: &mut Inner, prefix: char) -> String {
        inner.next_id += 1;
        format!("{prefix}{}", inner.next_id)
    }

    fn persist_context(&self, stored: &StoredContext) -> StoreResult<()> {
        let dir = self.root.join("contexts");
        write_atomic(&dir.join(format!("{}.cxt", stored.meta.id)), &write_cxt(&stored.context))?;
        let meta = serde_json::to_string_pretty(&stored.meta).map_err(implicheck::Error::from)?;
        write_atomic(&dir.join(format!("{}.json", stored.meta.id)), &meta)?;
        Ok(())
    }

    fn persist_session(&self, id: &str, stored: &StoredSession) -> StoreResult<()> {
        let dir = self.root.join("sessions");
        write_atomic(&dir.join(format!("{id}.jsonl")), &stored.session.log_jsonl())?;
        let meta = SessionMeta {
            id: id.to_owned(),
            context_id: stored.context_id.clone(),
        };
        let meta = serde_json::to_string_pretty(&meta).map_err(implicheck::Error::from)?;
        write_atomic(&dir.join(format!("{id}.json")), &meta)?;
        Ok(())
    }

    /// Stores a new table as version 1 of a fresh lineage.
    pub fn create_context(&self, context: FormalContext) -> StoreResult<StoredContext> {
        let mut inner = self.lock();
        let id = Self::fresh_id(&mut inner, 'c');
        let stored = StoredContext {
            meta: ContextMeta {
                id: id.clone(),
                lineage: id.clone(),
                version: 1,
                parent: None,
            },
            context: Arc::new(context),
        };
        self.persist_context(&stored)?;
        inner.contexts.insert(id, stored.clone());
        Ok(stored)
    }

    pub fn context(&self, id: &str) -> StoreResult<StoredContext> {
        self.lock().contexts.get(id).cloned().ok_or_else(|| StoreError::NotFound {
            kind: "context",
            id: id.to_owned(),
        })
    }

    /// All versions in the lineage of `id`, oldest first.
    pub fn history(&self, id: &str) -> StoreResult<Vec<ContextMeta>> {
        let lineage = self.context(id)?.meta.lineage;
        let inner = self.lock();
        let mut versions: Vec<ContextMeta> = inner
            .contexts
            .values()
            .filter(|c| c.meta.lineage == lineage)
            .map(|c| c.meta.clone())
            .collect();
        versions.sort_by_key(|m| m.version);
        Ok(versions)
    }

    fn head<'a>(inner: &'a Inner, lineage: &str) -> &'a StoredContext {
        inner
            .contexts
            .values()
            .filter(|c| c.meta.lineage == lineage)
            .max_by_key(|c| c.meta.version)
            .expect("a lineage has at least one version")
    }

    pub fn open_session(
        &self,
        context_id: &str,
        candidate: CandidateObject,
        config: SessionConfig,
    ) -> StoreResult<(String, Session)> {
        let stored = self.context(context_id)?;
        // the base may take a while; do not hold the lock for it
        let session = Session::open((*stored.context).clone(), candidate, config)?;
        let mut inner = self.lock();
        let id = Self::fresh_id(&mut inner, 's');
        let entry = StoredSession {
            context_id: context_id.to_owned(),
            session,
        };
        self.persist_session(&id, &entry)?;
        let snapshot = entry.session.clone();
        inner.sessions.insert(id.clone(), entry);
        Ok((id, snapshot))
    }

    /// Current session state and the id of its snapshot context.
    pub fn session(&self, id: &str) -> StoreResult<(String, Session)> {
        let inner = self.lock();
        let stored = inner.sessions.get(id).ok_or_else(|| StoreError::NotFound {
            kind: "session",
            id: id.to_owned(),
        })?;
        Ok((stored.context_id.clone(), stored.session.clone()))
    }

    /// Runs `f` against the session and persists the log afterwards, also
    /// when `f` fails after changing the session.
    pub fn update_session<R>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> implicheck::Result<R>,
    ) -> StoreResult<(R, String, Session)> {
        let mut inner = self.lock();
        let stored = inner.sessions.get_mut(id).ok_or_else(|| StoreError::NotFound {
            kind: "session",
            id: id.to_owned(),
        })?;
        let before = stored.session.log().len();
        let result = f(&mut stored.session);
        if stored.session.log().len() != before {
            let stored = &inner.sessions[id];
            self.persist_session(id, stored)?;
        }
        let stored = &inner.sessions[id];
        Ok((result?, stored.context_id.clone(), stored.session.clone()))
    }

    /// Commits a clean session as the next version of its lineage. Only a
    /// session opened on the current head may commit.
    pub fn commit_session(&self, id: &str) -> StoreResult<StoredContext> {
        let mut inner = self.lock();
        let context_id = inner
            .sessions
            .get(id)
            .ok_or_else(|| StoreError::NotFound {
                kind: "session",
                id: id.to_owned(),
            })?
            .context_id
            .clone();
        let snapshot = inner.contexts[&context_id].meta.clone();
        let head = Self::head(&inner, &snapshot.lineage).meta.clone();
        if head.id != snapshot.id {
            return Err(StoreError::RebaseRequired { head: head.id });
        }
        let committed = inner.sessions.get_mut(id).expect("checked above").session.commit()?;
        let new_id = Self::fresh_id(&mut inner, 'c');
        let stored = StoredContext {
            meta: ContextMeta {
                id: new_id.clone(),
                lineage: snapshot.lineage,
                version: head.version + 1,
                parent: Some(head.id),
            },
            context: Arc::new(committed),
        };
        self.persist_context(&stored)?;
        inner.contexts.insert(new_id, stored.clone());
        self.persist_session(id, &inner.sessions[id])?;
        Ok(stored)
    }

    /// Moves a session onto the head of its lineage.
    pub fn rebase_session(&self, id: &str) -> StoreResult<(String, Session)> {
        let mut inner = self.lock();
        let context_id = inner
            .sessions
            .get(id)
            .ok_or_else(|| StoreError::NotFound {
                kind: "session",
                id: id.to_owned(),
            })?
            .context_id
            .clone();
        let snapshot = inner.contexts[&context_id].clone();
        let head = Self::head(&inner, &snapshot.meta.lineage).clone();
        if head.meta.id != snapshot.meta.id {
            let old = &snapshot.context;
            let new = &head.context;
            let committed: Vec<CandidateObject> = (old.num_objects()..new.num_objects())
                .map(|g| CandidateObject {
                    name: new.object_names()[g].clone(),
                    intent: new.row(ObjectId(g)).clone(),
                })
                .collect();
            let stored = inner.sessions.get_mut(id).expect("checked above");
            stored.session.rebase((*head.context).clone(), &committed)?;
            stored.context_id = head.meta.id.clone();
            self.persist_session(id, &inner.sessions[id])?;
        }
        let stored = &inner.sessions[id];
        Ok((stored.context_id.clone(), stored.session.clone()))
    }

    pub fn base_job(&self, id: &str) -> Option<BaseJob> {
        self.base_jobs.lock().unwrap_or_else(|p| p.into_inner()).get(id).cloned()
    }

    /// Records `job` unless a job for `id` already exists; returns whether it
    /// was recorded.
    pub fn start_base_job(&self, id: &str) -> bool {
        let mut jobs = self.base_jobs.lock().unwrap_or_else(|p| p.into_inner());
        if jobs.contains_key(id) {
            return false;
        }
        jobs.insert(id.to_owned(), BaseJob::Running { started: Instant::now() });
        true
    }

    pub fn finish_base_job(&self, id: &str, job: BaseJob) {
        self.base_jobs
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id.to_owned(), job);
    }
}
