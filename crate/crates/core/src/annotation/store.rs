//! Task store: an event log with compare-and-set commits.
//!
//! State is only ever changed by applying [`StoreEvent`]s. Writers take a
//! snapshot, decide, and commit their events against the snapshot's version;
//! a commit against a stale version fails with [`StoreError::Conflict`] and
//! the caller retries from a fresh snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnnotationRecord, AnnotationTask, HelperStats};

pub const LOG_HEADER: &str = "STASKLOG1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store changed since version {expected} (now {actual})")]
    Conflict { expected: u64, actual: u64 },
    #[error("event rejected: {0}")]
    Rejected(String),
    #[error("task log line {line_no}: {message}")]
    Corrupt { line_no: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StoreEvent {
    TaskCreated(AnnotationTask),
    Assigned { task_id: u64, helper_id: String },
    Released { task_id: u64, helper_id: String },
    Submitted(AnnotationRecord),
}

/// Everything the store knows: tasks, helper summaries and completed
/// annotations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreState {
    pub tasks: BTreeMap<u64, AnnotationTask>,
    pub helpers: BTreeMap<String, HelperStats>,
    pub records: Vec<AnnotationRecord>,
}

impl StoreState {
    pub fn next_task_id(&self) -> u64 {
        self.tasks.keys().next_back().map_or(1, |id| id + 1)
    }

    pub fn incomplete_tasks(&self) -> impl Iterator<Item = &AnnotationTask> {
        self.tasks.values().filter(|t| !t.is_retired())
    }

    pub fn records_for(&self, task_id: u64) -> impl Iterator<Item = &AnnotationRecord> {
        self.records.iter().filter(move |r| r.task_id == task_id)
    }

    /// Applies one event, refusing anything that would break an invariant.
    pub fn apply(&mut self, event: &StoreEvent) -> Result<(), StoreError> {
        let reject = |m: String| Err(StoreError::Rejected(m));
        match event {
            StoreEvent::TaskCreated(task) => {
                if self.tasks.contains_key(&task.task_id) {
                    return reject(format!("task {} exists", task.task_id));
                }
                if task.required == 0 || task.completed != 0 || !task.assigned_helpers.is_empty() {
                    return reject(format!("task {} is not fresh", task.task_id));
                }
                self.tasks.insert(task.task_id, task.clone());
            }
            StoreEvent::Assigned { task_id, helper_id } => {
                let Some(task) = self.tasks.get_mut(task_id) else {
                    return reject(format!("unknown task {task_id}"));
                };
                let helper = self.helpers.entry(helper_id.clone()).or_insert_with(|| HelperStats::new(helper_id));
                if task.is_retired() || helper.tasks_seen.contains(task_id) || task.assigned_helpers.len() >= task.required as usize {
                    return reject(format!("task {task_id} cannot go to {helper_id}"));
                }
                task.assigned_helpers.insert(helper_id.clone());
                helper.tasks_seen.insert(*task_id);
            }
            StoreEvent::Released { task_id, helper_id } => {
                let submitted = self.records_for(*task_id).any(|r| &r.helper_id == helper_id);
                let Some(task) = self.tasks.get_mut(task_id) else {
                    return reject(format!("unknown task {task_id}"));
                };
                if submitted || !task.assigned_helpers.remove(helper_id) {
                    return reject(format!("{helper_id} holds no open assignment on task {task_id}"));
                }
                // tasks_seen keeps the task: a helper never gets it again
            }
            StoreEvent::Submitted(record) => {
                let duplicate = self.records_for(record.task_id).any(|r| r.helper_id == record.helper_id);
                let Some(task) = self.tasks.get_mut(&record.task_id) else {
                    return reject(format!("unknown task {}", record.task_id));
                };
                if duplicate || !task.assigned_helpers.contains(&record.helper_id) || task.is_retired() {
                    return reject(format!("submission by {} on task {}", record.helper_id, record.task_id));
                }
                task.completed += 1;
                self.helpers
                    .entry(record.helper_id.clone())
                    .or_insert_with(|| HelperStats::new(&record.helper_id))
                    .tasks_completed += 1;
                self.records.push(record.clone());
            }
        }
        Ok(())
    }

    /// Recomputes counters from the records and assignments and compares them
    /// with the stored ones.
    pub fn audit(&self) -> Result<(), String> {
        let mut completed: BTreeMap<u64, u32> = BTreeMap::new();
        let mut per_helper: BTreeMap<&str, u64> = BTreeMap::new();
        let mut pairs = BTreeSet::new();
        for r in &self.records {
            *completed.entry(r.task_id).or_default() += 1;
            *per_helper.entry(&r.helper_id).or_default() += 1;
            if !pairs.insert((r.task_id, r.helper_id.as_str())) {
                return Err(format!("{} submitted task {} twice", r.helper_id, r.task_id));
            }
            let assigned = self
                .tasks
                .get(&r.task_id)
                .is_some_and(|t| t.assigned_helpers.contains(&r.helper_id));
            if !assigned {
                return Err(format!("record by {} on task {} without assignment", r.helper_id, r.task_id));
            }
        }
        for t in self.tasks.values() {
            let n = completed.get(&t.task_id).copied().unwrap_or(0);
            if n != t.completed || t.completed > t.required {
                return Err(format!("task {}: counter {} but {} records", t.task_id, t.completed, n));
            }
            for h in &t.assigned_helpers {
                if !self.helpers.get(h).is_some_and(|s| s.tasks_seen.contains(&t.task_id)) {
                    return Err(format!("task {} assigned to {h} who never saw it", t.task_id));
                }
            }
        }
        for h in self.helpers.values() {
            let n = per_helper.get(h.helper_id.as_str()).copied().unwrap_or(0);
            if n != h.tasks_completed || h.tasks_completed > h.tasks_seen.len() as u64 {
                return Err(format!("helper {}: counter {} but {} records", h.helper_id, h.tasks_completed, n));
            }
        }
        Ok(())
    }
}

/// A versioned snapshot. The version counts events applied so far.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub version: u64,
    pub state: Arc<StoreState>,
}

pub trait TaskStore: Send + Sync {
    fn snapshot(&self) -> Result<Snapshot, StoreError>;

    /// Applies `events` atomically if the store is still at `expected`;
    /// returns the new version.
    fn commit(&self, expected: u64, events: &[StoreEvent]) -> Result<u64, StoreError>;
}

impl<S: TaskStore + ?Sized> TaskStore for Arc<S> {
    fn snapshot(&self) -> Result<Snapshot, StoreError> {
        (**self).snapshot()
    }

    fn commit(&self, expected: u64, events: &[StoreEvent]) -> Result<u64, StoreError> {
        (**self).commit(expected, events)
    }
}

fn apply_all(state: &StoreState, events: &[StoreEvent]) -> Result<StoreState, StoreError> {
    let mut next = state.clone();
    for e in events {
        next.apply(e)?;
    }
    Ok(next)
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    inner: Mutex<Snapshot>,
}

impl Default for Snapshot {
    fn default() -> Self {
        Snapshot {
            version: 0,
            state: Arc::new(StoreState::default()),
        }
    }
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl TaskStore for MemoryStore {
    fn snapshot(&self) -> Result<Snapshot, StoreError> {
        Ok(self.inner.lock().unwrap_or_else(|e| e.into_inner()).clone())
    }

    fn commit(&self, expected: u64, events: &[StoreEvent]) -> Result<u64, StoreError> {
        let mut cur = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        if cur.version != expected {
            return Err(StoreError::Conflict {
                expected,
                actual: cur.version,
            });
        }
        let next = apply_all(&cur.state, events)?;
        cur.version += events.len() as u64;
        cur.state = Arc::new(next);
        Ok(cur.version)
    }
}

/// Append-only log file: a `STASKLOG1` header line, then one JSON event per
/// line. The whole log is replayed on open.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    inner: Mutex<(Snapshot, File)>,
}

impl FileStore {
    /// Opens `path`, creating an empty log when it does not exist.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut snap = Snapshot::default();
        let existing = if path.exists() { std::fs::read(&path)? } else { Vec::new() };
        if !existing.is_empty() {
            let mut bytes = existing;
            // a commit that died mid-write leaves a tail without its newline;
            // it was never acknowledged, so it is dropped
            let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            if complete < bytes.len() {
                log::warn!(
                    "{}: dropping {} bytes of an incomplete final event",
                    path.display(),
                    bytes.len() - complete
                );
                bytes.truncate(complete);
                OpenOptions::new().write(true).open(&path)?.set_len(complete as u64)?;
            }
            if bytes.is_empty() {
                // even the header was torn
                let mut f = OpenOptions::new().write(true).open(&path)?;
                writeln!(f, "{LOG_HEADER}")?;
                f.sync_data()?;
                bytes = format!("{LOG_HEADER}\n").into_bytes();
            }
            let mut state = StoreState::default();
            for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
                let line_no = i + 1;
                let line = std::str::from_utf8(line).map_err(|e| StoreError::Corrupt {
                    line_no,
                    message: e.to_string(),
                })?;
                if line_no == 1 {
                    if line != LOG_HEADER {
                        return Err(StoreError::Corrupt {
                            line_no,
                            message: format!("expected header {LOG_HEADER}"),
                        });
                    }
                    continue;
                }
                if line.trim().is_empty() {
                    continue;
                }
                let event: StoreEvent = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                    line_no,
                    message: e.to_string(),
                })?;
                state.apply(&event).map_err(|e| StoreError::Corrupt {
                    line_no,
                    message: e.to_string(),
                })?;
                snap.version += 1;
            }
            snap.state = Arc::new(state);
        } else {
            let mut f = File::create(&path)?;
            writeln!(f, "{LOG_HEADER}")?;
            f.sync_data()?;
        }
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(FileStore {
            path,
            inner: Mutex::new((snap, file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl TaskStore for FileStore {
    fn snapshot(&self) -> Result<Snapshot, StoreError> {
        Ok(self.inner.lock().unwrap_or_else(|e| e.into_inner()).0.clone())
    }

    fn commit(&self, expected: u64, events: &[StoreEvent]) -> Result<u64, StoreError> {
        let mut guard = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        let (cur, file) = &mut *guard;
        if cur.version != expected {
            return Err(StoreError::Conflict {
                expected,
                actual: cur.version,
            });
        }
        let next = apply_all(&cur.state, events)?;
        let mut buf = BufWriter::new(Vec::new());
        for e in events {
            serde_json::to_writer(&mut buf, e).map_err(io::Error::from)?;
            buf.write_all(b"\n")?;
        }
        let bytes = buf.into_inner().map_err(|e| e.into_error())?;
        let before = file.metadata()?.len();
        if let Err(e) = file.write_all(&bytes).and_then(|()| file.sync_data()) {
            // keep the log a clean prefix so later commits stay readable
            let _ = file.set_len(before);
            return Err(e.into());
        }
        cur.version += events.len() as u64;
        cur.state = Arc::new(next);
        Ok(cur.version)
    }
}
