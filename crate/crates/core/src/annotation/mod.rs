//! Human annotation collection: tasks, no-repeat assignment, submissions,
//! agreement and static task pages.

mod page;
mod store;

use std::collections::{BTreeSet, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use page::{compile_static_task_page, ButtonConfig, PageError, TaskPage, UiConfig};
pub use store::{FileStore, MemoryStore, Snapshot, StoreError, StoreEvent, StoreState, TaskStore, LOG_HEADER};

use crate::analytics::Provenance;
use crate::corpus::{validate_relations, validate_spans, DiscourseLabel, DiscourseSpan, LawDocument, Relation};

pub const DEFAULT_REQUIRED: u32 = 2;
/// Commit attempts before a conflict is reported to the caller.
pub const MAX_COMMIT_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: u64,
    pub doc_id: String,
    pub paragraph_index: usize,
    /// Paragraph text at creation time; submissions are validated against it.
    pub text: String,
    pub required: u32,
    pub completed: u32,
    pub assigned_helpers: BTreeSet<String>,
}

impl AnnotationTask {
    pub fn is_retired(&self) -> bool {
        self.completed >= self.required
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelperStats {
    pub helper_id: String,
    pub tasks_completed: u64,
    pub tasks_seen: BTreeSet<u64>,
}

impl HelperStats {
    pub fn new(helper_id: &str) -> Self {
        HelperStats {
            helper_id: helper_id.to_string(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub task_id: u64,
    pub helper_id: String,
    pub spans: Vec<DiscourseSpan>,
    pub relations: Vec<Relation>,
    pub submitted_at: DateTime<Utc>,
    pub provenance: Provenance,
}

/// What a helper sends back for a task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub task_id: u64,
    #[serde(default)]
    pub spans: Vec<DiscourseSpan>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("no paragraph {paragraph} in document `{doc_id}`")]
    UnknownParagraph { doc_id: String, paragraph: usize },
    #[error("unknown task {0}")]
    UnknownTask(u64),
    #[error("required annotations must be at least 1")]
    InvalidRequired,
    #[error("helper id must not be empty")]
    EmptyHelper,
    #[error("task {task_id} is not assigned to {helper_id}")]
    NotAssigned { task_id: u64, helper_id: String },
    #[error("{helper_id} already submitted task {task_id}")]
    DuplicateSubmission { task_id: u64, helper_id: String },
    #[error("invalid spans: {0}")]
    InvalidSpans(String),
    #[error("agreement needs at least two records")]
    InsufficientRecords,
    #[error("store kept changing; gave up after {0} attempts")]
    StoreConflict(usize),
    #[error(transparent)]
    Store(StoreError),
}

impl From<StoreError> for AnnotationError {
    fn from(e: StoreError) -> Self {
        AnnotationError::Store(e)
    }
}

/// Snapshot, decide, commit; retried from a fresh snapshot on conflict.
/// `decide` returns the events to commit plus the value to hand back.
fn transact<S, T>(
    store: &S,
    mut decide: impl FnMut(&StoreState) -> Result<(Vec<StoreEvent>, T), AnnotationError>,
) -> Result<T, AnnotationError>
where
    S: TaskStore + ?Sized,
{
    for _ in 0..MAX_COMMIT_ATTEMPTS {
        let snap = store.snapshot()?;
        let (events, out) = decide(&snap.state)?;
        if events.is_empty() {
            return Ok(out);
        }
        match store.commit(snap.version, &events) {
            Ok(_) => return Ok(out),
            Err(StoreError::Conflict { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(AnnotationError::StoreConflict(MAX_COMMIT_ATTEMPTS))
}

/// One task per `(doc_id, paragraph)` needing `required` annotations.
/// Paragraphs that already have a task keep it, so re-running is harmless.
/// Returns the tasks for `refs`, in order.
pub fn create_tasks<S: TaskStore + ?Sized>(
    store: &S,
    corpus: &[LawDocument],
    refs: &[(String, usize)],
    required: u32,
) -> Result<Vec<AnnotationTask>, AnnotationError> {
    if required == 0 {
        return Err(AnnotationError::InvalidRequired);
    }
    let mut texts = Vec::with_capacity(refs.len());
    for (doc_id, paragraph) in refs {
        let text = corpus
            .iter()
            .find(|d| &d.id == doc_id)
            .and_then(|d| d.paragraph(*paragraph))
            .map(|p| p.text.clone())
            .ok_or_else(|| AnnotationError::UnknownParagraph {
                doc_id: doc_id.clone(),
                paragraph: *paragraph,
            })?;
        texts.push(text);
    }
    transact(store, |state| {
        let mut next_id = state.next_task_id();
        let mut events = Vec::new();
        let mut out = Vec::with_capacity(refs.len());
        for ((doc_id, paragraph), text) in refs.iter().zip(&texts) {
            let existing = state
                .tasks
                .values()
                .chain(events.iter().filter_map(|e| match e {
                    StoreEvent::TaskCreated(t) => Some(t),
                    _ => None,
                }))
                .find(|t| &t.doc_id == doc_id && t.paragraph_index == *paragraph)
                .cloned();
            let task = match existing {
                Some(t) => t,
                None => {
                    let t = AnnotationTask {
                        task_id: next_id,
                        doc_id: doc_id.clone(),
                        paragraph_index: *paragraph,
                        text: text.clone(),
                        required,
                        completed: 0,
                        assigned_helpers: BTreeSet::new(),
                    };
                    next_id += 1;
                    events.push(StoreEvent::TaskCreated(t.clone()));
                    t
                }
            };
            out.push(task);
        }
        Ok((events, out))
    })
}

/// The task `helper_id` should work on next, or `None` when nothing is left
/// for them.
///
/// A helper never receives a task twice. Among eligible tasks the one closest
/// to completion wins, then the lowest id. A task is handed out to at most
/// `required` helpers.
pub fn assign_task<S: TaskStore + ?Sized>(store: &S, helper_id: &str) -> Result<Option<AnnotationTask>, AnnotationError> {
    if helper_id.is_empty() {
        return Err(AnnotationError::EmptyHelper);
    }
    transact(store, |state| {
        let seen = state.helpers.get(helper_id).map(|h| &h.tasks_seen);
        let pick = state
            .incomplete_tasks()
            .filter(|t| seen.is_none_or(|s| !s.contains(&t.task_id)))
            .filter(|t| t.assigned_helpers.len() < t.required as usize)
            // max completed, then min id
            .min_by_key(|t| (std::cmp::Reverse(t.completed), t.task_id));
        Ok(match pick {
            None => (Vec::new(), None),
            Some(t) => {
                let mut task = t.clone();
                task.assigned_helpers.insert(helper_id.to_string());
                let e = StoreEvent::Assigned {
                    task_id: t.task_id,
                    helper_id: helper_id.to_string(),
                };
                (vec![e], Some(task))
            }
        })
    })
}

/// Gives an unsubmitted assignment back so another helper can take it. The
/// releasing helper still never sees the task again.
pub fn release_task<S: TaskStore + ?Sized>(store: &S, helper_id: &str, task_id: u64) -> Result<(), AnnotationError> {
    transact(store, |state| {
        let task = state.tasks.get(&task_id).ok_or(AnnotationError::UnknownTask(task_id))?;
        if !task.assigned_helpers.contains(helper_id) || state.records_for(task_id).any(|r| r.helper_id == helper_id) {
            return Err(AnnotationError::NotAssigned {
                task_id,
                helper_id: helper_id.to_string(),
            });
        }
        let e = StoreEvent::Released {
            task_id,
            helper_id: helper_id.to_string(),
        };
        Ok((vec![e], ()))
    })
}

/// Records a helper's annotation and returns the updated task.
pub fn submit_annotation<S: TaskStore + ?Sized>(
    store: &S,
    helper_id: &str,
    submission: &Submission,
    submitted_at: DateTime<Utc>,
) -> Result<AnnotationTask, AnnotationError> {
    let task_id = submission.task_id;
    transact(store, |state| {
        let task = state.tasks.get(&task_id).ok_or(AnnotationError::UnknownTask(task_id))?;
        if state.records_for(task_id).any(|r| r.helper_id == helper_id) {
            return Err(AnnotationError::DuplicateSubmission {
                task_id,
                helper_id: helper_id.to_string(),
            });
        }
        if !task.assigned_helpers.contains(helper_id) {
            return Err(AnnotationError::NotAssigned {
                task_id,
                helper_id: helper_id.to_string(),
            });
        }
        let spans = validate_spans(&task.text, &submission.spans).map_err(|e| AnnotationError::InvalidSpans(e.to_string()))?;
        // relations index the spans as submitted, so check against that order
        validate_relations(submission.spans.len(), &submission.relations).map_err(|e| AnnotationError::InvalidSpans(e.to_string()))?;
        let relations = remap_relations(&submission.spans, &spans, &submission.relations);
        let record = AnnotationRecord {
            task_id,
            helper_id: helper_id.to_string(),
            spans,
            relations,
            submitted_at,
            provenance: Provenance::Human,
        };
        let mut updated = task.clone();
        updated.completed += 1;
        Ok((vec![StoreEvent::Submitted(record)], updated))
    })
}

/// Rewrites relation endpoints from submitted order to sorted order.
fn remap_relations(submitted: &[DiscourseSpan], sorted: &[DiscourseSpan], relations: &[Relation]) -> Vec<Relation> {
    let position = |i: usize| sorted.iter().position(|s| s == &submitted[i]).unwrap_or(i);
    relations
        .iter()
        .map(|r| Relation {
            from_span: position(r.from_span),
            to_span: position(r.to_span),
            kind: r.kind.clone(),
        })
        .collect()
}

/// Read-only stats for one helper; zeroed for helpers the store has never seen.
pub fn session_stats<S: TaskStore + ?Sized>(store: &S, helper_id: &str) -> Result<HelperStats, AnnotationError> {
    let snap = store.snapshot()?;
    Ok(snap
        .state
        .helpers
        .get(helper_id)
        .cloned()
        .unwrap_or_else(|| HelperStats::new(helper_id)))
}

/// Checks store counters against recomputation from the record log.
pub fn audit<S: TaskStore + ?Sized>(store: &S) -> Result<(), String> {
    store.snapshot().map_err(|e| e.to_string())?.state.audit()
}

type SpanKey = (usize, usize, DiscourseLabel);

fn span_f1(a: &HashSet<SpanKey>, b: &HashSet<SpanKey>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let common = a.intersection(b).count() as f64;
    if common == 0.0 {
        return 0.0;
    }
    let precision = common / a.len() as f64;
    let recall = common / b.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Exact-match span F1 averaged over all pairs of records. Two empty
/// annotations agree perfectly.
pub fn pairwise_agreement(records: &[AnnotationRecord]) -> Result<f64, AnnotationError> {
    if records.len() < 2 {
        return Err(AnnotationError::InsufficientRecords);
    }
    let sets: Vec<HashSet<SpanKey>> = records
        .iter()
        .map(|r| r.spans.iter().map(|s| (s.start, s.end, s.label)).collect())
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            total += span_f1(&sets[i], &sets[j]);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_statute;
    use DiscourseLabel::*;

    const TEXT: &str = "The trial court judge may appoint a magistrate.";

    fn corpus() -> Vec<LawDocument> {
        vec![parse_statute(&format!("{TEXT}\n\nSecond paragraph.\n\nThird one."), "TN", "§ 1-1-1").unwrap()]
    }

    fn refs(n: usize) -> Vec<(String, usize)> {
        (0..n).map(|p| ("TN:§ 1-1-1".to_string(), p)).collect()
    }

    fn submit(store: &MemoryStore, helper: &str, task_id: u64, spans: Vec<DiscourseSpan>) -> Result<AnnotationTask, AnnotationError> {
        let s = Submission {
            task_id,
            spans,
            relations: vec![],
        };
        submit_annotation(store, helper, &s, DateTime::UNIX_EPOCH)
    }

    fn record(spans: &[(usize, usize, DiscourseLabel)]) -> AnnotationRecord {
        AnnotationRecord {
            task_id: 1,
            helper_id: "h".into(),
            spans: spans.iter().map(|&(s, e, l)| DiscourseSpan::from_text(TEXT, s, e, l)).collect(),
            relations: vec![],
            submitted_at: DateTime::UNIX_EPOCH,
            provenance: Provenance::Human,
        }
    }

    #[test]
    fn create_is_idempotent_and_checks_refs() {
        let store = MemoryStore::new();
        assert!(create_tasks(&store, &corpus(), &[], 2).unwrap().is_empty());
        let tasks = create_tasks(&store, &corpus(), &refs(3), 2).unwrap();
        assert_eq!(tasks.iter().map(|t| t.task_id).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(tasks.iter().all(|t| t.required == 2 && t.completed == 0));
        let again = create_tasks(&store, &corpus(), &refs(3), 2).unwrap();
        assert_eq!(again, tasks);
        assert_eq!(store.snapshot().unwrap().version, 3);
        assert!(matches!(
            create_tasks(&store, &corpus(), &[("TN:§ 1-1-1".into(), 9)], 2),
            Err(AnnotationError::UnknownParagraph { .. })
        ));
        assert!(matches!(
            create_tasks(&store, &corpus(), &refs(1), 0),
            Err(AnnotationError::InvalidRequired)
        ));
    }

    #[test]
    fn no_repeat_and_finish_first() {
        let store = MemoryStore::new();
        create_tasks(&store, &corpus(), &refs(1), 2).unwrap();
        assert_eq!(assign_task(&store, "a").unwrap().unwrap().task_id, 1);
        assert_eq!(assign_task(&store, "a").unwrap(), None);

        let store = MemoryStore::new();
        create_tasks(&store, &corpus(), &refs(2), 2).unwrap();
        // helper x finishes task 2, so 2 has completed=1 and 1 has completed=0
        let snap = store.snapshot().unwrap();
        store
            .commit(
                snap.version,
                &[StoreEvent::Assigned {
                    task_id: 2,
                    helper_id: "x".into(),
                }],
            )
            .unwrap();
        submit(&store, "x", 2, vec![]).unwrap();
        assert_eq!(assign_task(&store, "y").unwrap().unwrap().task_id, 2);
        assert!(matches!(assign_task(&store, ""), Err(AnnotationError::EmptyHelper)));
    }

    #[test]
    fn submission_lifecycle() {
        let store = MemoryStore::new();
        create_tasks(&store, &corpus(), &refs(1), 2).unwrap();
        let span = DiscourseSpan::from_text(TEXT, 0, 21, Subject);
        assert!(matches!(submit(&store, "a", 1, vec![]), Err(AnnotationError::NotAssigned { .. })));
        assign_task(&store, "a").unwrap();
        assign_task(&store, "b").unwrap();
        let bad = DiscourseSpan::from_text(TEXT, 0, 5, Subject);
        let mut bad = bad;
        bad.text = "nope".into();
        assert!(matches!(submit(&store, "a", 1, vec![bad]), Err(AnnotationError::InvalidSpans(_))));
        let t = submit(&store, "a", 1, vec![span.clone()]).unwrap();
        assert_eq!((t.completed, t.is_retired()), (1, false));
        assert!(matches!(
            submit(&store, "a", 1, vec![span.clone()]),
            Err(AnnotationError::DuplicateSubmission { .. })
        ));
        let t = submit(&store, "b", 1, vec![span]).unwrap();
        assert!(t.is_retired());
        assert_eq!(session_stats(&store, "a").unwrap().tasks_completed, 1);
        assert_eq!(session_stats(&store, "nobody").unwrap(), HelperStats::new("nobody"));
        audit(&store).unwrap();
        assert_eq!(assign_task(&store, "c").unwrap(), None);
    }

    #[test]
    fn release_frees_the_slot_for_others() {
        let store = MemoryStore::new();
        create_tasks(&store, &corpus(), &refs(1), 1).unwrap();
        assign_task(&store, "a").unwrap().unwrap();
        assert_eq!(assign_task(&store, "b").unwrap(), None);
        release_task(&store, "a", 1).unwrap();
        assert_eq!(assign_task(&store, "a").unwrap(), None);
        assert_eq!(assign_task(&store, "b").unwrap().unwrap().task_id, 1);
        assert!(matches!(release_task(&store, "a", 1), Err(AnnotationError::NotAssigned { .. })));
        audit(&store).unwrap();
    }

    #[test]
    fn stale_commit_conflicts() {
        let store = MemoryStore::new();
        create_tasks(&store, &corpus(), &refs(1), 2).unwrap();
        let stale = store.snapshot().unwrap();
        assign_task(&store, "a").unwrap();
        let e = StoreEvent::Assigned {
            task_id: 1,
            helper_id: "b".into(),
        };
        assert!(matches!(store.commit(stale.version, &[e]), Err(StoreError::Conflict { .. })));
    }

    #[test]
    fn relations_follow_span_sorting() {
        let store = MemoryStore::new();
        create_tasks(&store, &corpus(), &refs(1), 1).unwrap();
        assign_task(&store, "a").unwrap();
        let subject = DiscourseSpan::from_text(TEXT, 0, 21, Subject);
        let consequence = DiscourseSpan::from_text(TEXT, 22, 33, Consequence);
        let s = Submission {
            task_id: 1,
            spans: vec![consequence, subject],
            relations: vec![Relation {
                from_span: 1,
                to_span: 0,
                kind: "holds".into(),
            }],
        };
        submit_annotation(&store, "a", &s, DateTime::UNIX_EPOCH).unwrap();
        let rec = &store.snapshot().unwrap().state.records[0];
        assert_eq!(rec.spans[0].label, Subject);
        assert_eq!((rec.relations[0].from_span, rec.relations[0].to_span), (0, 1));
    }

    #[test]
    fn agreement() {
        let a = record(&[(0, 21, Subject), (22, 33, Consequence)]);
        assert_eq!(pairwise_agreement(&[a.clone(), a.clone()]).unwrap(), 1.0);
        let disjoint = record(&[(34, 46, Object)]);
        assert_eq!(pairwise_agreement(&[a.clone(), disjoint]).unwrap(), 0.0);
        let half = record(&[(0, 21, Subject), (34, 46, Object)]);
        assert!((pairwise_agreement(&[a.clone(), half]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(pairwise_agreement(&[record(&[]), record(&[])]).unwrap(), 1.0);
        assert!(matches!(pairwise_agreement(&[a]), Err(AnnotationError::InsufficientRecords)));
    }

    #[test]
    fn file_store_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tasks.log");
        {
            let store = FileStore::open(&path).unwrap();
            create_tasks(&store, &corpus(), &refs(2), 2).unwrap();
            assign_task(&store, "a").unwrap();
        }
        let store = FileStore::open(&path).unwrap();
        let snap = store.snapshot().unwrap();
        assert_eq!(snap.version, 3);
        assert!(snap.state.tasks[&1].assigned_helpers.contains("a"));
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("STASKLOG1\n"));

        std::fs::write(&path, "STASKLOG0\n").unwrap();
        assert!(matches!(FileStore::open(&path), Err(StoreError::Corrupt { line_no: 1, .. })));
    }
}
