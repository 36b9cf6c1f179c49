//! Durable, append-only persistence for blobs, records and per-scenario
//! event logs.
//!
//! All writes go through one JSON-lines journal (`journal.jsonl`) next to a
//! `blobs/` directory of content-addressed files. Opening a store replays the
//! journal; the in-memory indexes are rebuilt from it.
//!
//! Appends to one scenario's log are serialized by that log's mutex, which
//! is held across the journal write, so seq order in the journal equals
//! acknowledgment order. Different scenarios only share the journal file
//! lock for the duration of a single write.

mod blob;
mod csvio;
mod journal;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Cursor};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex, MutexGuard, RwLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::{
    fold_events, Annotation, AnnotationBody, AnnotationError, BlobHash, CategorySet, EventKind,
    FoldError, InteractionEvent, Layout, Pose, PoseError, PoseSample, ScenarioKey, Screenshot,
    ScreenshotId, Widget, WidgetId,
};

pub use blob::content_hash;
pub use csvio::{DatasetManifest, RecordCounts, SCHEMA_VERSION};
pub use journal::SyncMode;

use blob::{BlobError, BlobStore};
use journal::{Journal, Record, ReplayError};

const JOURNAL_FILE: &str = "journal.jsonl";
const BLOB_DIR: &str = "blobs";
const LOCK_FILE: &str = "LOCK";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("blob must not be empty")]
    EmptyBlob,
    #[error("blob storage is full")]
    StorageFull,
    #[error("{kind} `{id}` references a missing record or blob")]
    DanglingReference { kind: &'static str, id: String },
    #[error("{kind} `{id}` already exists with different content")]
    DuplicateId { kind: &'static str, id: String },
    #[error("unknown widget `{0}`")]
    UnknownWidget(WidgetId),
    #[error("unknown scenario {0}")]
    UnknownScenario(ScenarioKey),
    #[error("update for widget `{widget_id}` before any add in {scenario}")]
    UpdateBeforeAdd {
        scenario: ScenarioKey,
        widget_id: WidgetId,
    },
    #[error("pose sample at {got} ms precedes previous sample at {last} ms")]
    TimestampRegression { last: u64, got: u64 },
    #[error("invalid pose: {0}")]
    InvalidPose(#[from] PoseError),
    #[error("annotation version conflict: expected {expected}, stored {actual}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error(transparent)]
    InvalidAnnotation(#[from] AnnotationError),
    #[error("event for {scenario} has seq {found}, expected {expected}")]
    SeqConflict {
        scenario: ScenarioKey,
        expected: u64,
        found: u64,
    },
    #[error("{file}: {detail}")]
    SchemaMismatch { file: String, detail: String },
    #[error("missing blob {0}")]
    MissingBlob(BlobHash),
    #[error("journal corrupt at line {line}: {detail}")]
    Corrupt { line: usize, detail: String },
    #[error("stored log is invalid: {0}")]
    InvalidLog(#[from] FoldError),
    #[error("store at {} is in use by another process", .0.display())]
    Locked(PathBuf),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl StoreError {
    /// Stable error name used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::EmptyBlob => "EmptyBlob",
            StoreError::StorageFull => "StorageFull",
            StoreError::DanglingReference { .. } => "DanglingReference",
            StoreError::DuplicateId { .. } => "DuplicateId",
            StoreError::UnknownWidget(_) => "UnknownWidget",
            StoreError::UnknownScenario(_) => "UnknownScenario",
            StoreError::UpdateBeforeAdd { .. } => "UpdateBeforeAdd",
            StoreError::TimestampRegression { .. } => "TimestampRegression",
            StoreError::InvalidPose(e) => e.code(),
            StoreError::VersionConflict { .. } => "VersionConflict",
            StoreError::InvalidAnnotation(e) => e.code(),
            StoreError::SeqConflict { .. } => "SeqConflict",
            StoreError::SchemaMismatch { .. } => "SchemaMismatch",
            StoreError::MissingBlob(_) => "MissingBlob",
            StoreError::Corrupt { .. } => "Corrupt",
            StoreError::InvalidLog(e) => e.code(),
            StoreError::Locked(_) => "Locked",
            StoreError::Io(_) => "Io",
        }
    }
}

impl From<ReplayError> for StoreError {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::Io(e) => StoreError::Io(e),
            ReplayError::Corrupt { line, detail } => StoreError::Corrupt { line, detail },
        }
    }
}

impl From<BlobError> for StoreError {
    fn from(e: BlobError) -> Self {
        match e {
            BlobError::Full => StoreError::StorageFull,
            BlobError::Io(e) => StoreError::Io(e),
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Default)]
pub struct StoreOptions {
    pub sync: SyncMode,
    /// Upper bound on total blob bytes; `None` means unbounded.
    pub blob_quota_bytes: Option<u64>,
    pub categories: CategorySet,
}

/// Events after a given seq together with the log's current head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeBatch {
    pub events: Vec<InteractionEvent>,
    pub max_seq: u64,
}

#[derive(Default)]
struct Records {
    screenshots: BTreeMap<ScreenshotId, Screenshot>,
    widgets: BTreeMap<WidgetId, Widget>,
    by_screenshot: BTreeMap<ScreenshotId, BTreeSet<WidgetId>>,
    annotations: BTreeMap<WidgetId, Annotation>,
}

#[derive(Default)]
struct LogState {
    events: Vec<InteractionEvent>,
    added: BTreeSet<WidgetId>,
    samples: Vec<PoseSample>,
}

#[derive(Default)]
struct ScenarioLog {
    state: Mutex<LogState>,
    changed: Condvar,
}

impl ScenarioLog {
    fn lock(&self) -> MutexGuard<'_, LogState> {
        self.state.lock().expect("scenario log poisoned")
    }
}

pub struct Store {
    root: Option<PathBuf>,
    categories: CategorySet,
    blobs: BlobStore,
    journal: Option<Mutex<Journal>>,
    records: RwLock<Records>,
    logs: RwLock<BTreeMap<ScenarioKey, Arc<ScenarioLog>>>,
    dims_cache: Mutex<HashMap<BlobHash, Option<(u32, u32)>>>,
    /// Held for the store's lifetime; the OS releases it if the process dies.
    _lock: Option<std::fs::File>,
}

impl Store {
    /// Opens (or creates) a durable store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(dir, StoreOptions::default())
    }

    pub fn open_with(dir: impl AsRef<Path>, opts: StoreOptions) -> Result<Self> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let lock = std::fs::OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(dir.join(LOCK_FILE))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(std::fs::TryLockError::WouldBlock) => {
                return Err(StoreError::Locked(dir.to_owned()))
            }
            Err(std::fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        let blobs = BlobStore::open(Some(dir.join(BLOB_DIR)), opts.sync, opts.blob_quota_bytes)?;
        let (journal, replay) = Journal::open(&dir.join(JOURNAL_FILE), opts.sync)?;
        let mut store = Self::assemble(Some(dir.to_owned()), opts.categories, blobs);
        for (i, record) in replay.records.into_iter().enumerate() {
            store.replay(record).map_err(|e| StoreError::Corrupt {
                line: i + 1,
                detail: e.to_string(),
            })?;
        }
        store.journal = Some(Mutex::new(journal));
        store._lock = Some(lock);
        Ok(store)
    }

    /// A non-durable store, for tests and one-shot analyses.
    pub fn in_memory() -> Self {
        Self::in_memory_with(StoreOptions::default())
    }

    pub fn in_memory_with(opts: StoreOptions) -> Self {
        let blobs = BlobStore::open(None, opts.sync, opts.blob_quota_bytes)
            .expect("in-memory blob store cannot fail");
        Self::assemble(None, opts.categories, blobs)
    }

    fn assemble(root: Option<PathBuf>, categories: CategorySet, blobs: BlobStore) -> Self {
        Self {
            root,
            categories,
            blobs,
            journal: None,
            records: RwLock::default(),
            logs: RwLock::default(),
            dims_cache: Mutex::default(),
            _lock: None,
        }
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn categories(&self) -> &CategorySet {
        &self.categories
    }

    fn write(&self, record: &Record) -> Result<()> {
        if let Some(journal) = &self.journal {
            journal.lock().expect("journal poisoned").append(record)?;
        }
        Ok(())
    }

    /// Applies a journal record during open, re-checking every invariant.
    fn replay(&mut self, record: Record) -> Result<()> {
        match record {
            Record::Scenario { scenario } => {
                self.logs.get_mut().unwrap().entry(scenario).or_default();
            }
            Record::Screenshot(s) => {
                self.check_screenshot(&s)?;
                self.records.get_mut().unwrap().insert_screenshot(s);
            }
            Record::Widget(w) => {
                self.check_widget(&w)?;
                self.records.get_mut().unwrap().insert_widget(w);
            }
            Record::Event(e) => {
                let log = Arc::clone(
                    self.logs
                        .get_mut()
                        .unwrap()
                        .get(&e.scenario)
                        .ok_or_else(|| StoreError::UnknownScenario(e.scenario.clone()))?,
                );
                let mut state = log.lock();
                check_event(&state, &e)?;
                state.push_event(e);
            }
            Record::PoseSample(s) => {
                let logs = self.logs.get_mut().unwrap();
                let log = logs
                    .get(&s.scenario)
                    .ok_or_else(|| StoreError::UnknownScenario(s.scenario.clone()))?;
                let mut state = log.lock();
                check_sample(&state, &s)?;
                state.samples.push(s);
            }
            Record::Annotation(a) => {
                let records = self.records.get_mut().unwrap();
                if !records.widgets.contains_key(&a.widget_id) {
                    return Err(StoreError::UnknownWidget(a.widget_id));
                }
                records.annotations.insert(a.widget_id.clone(), a);
            }
        }
        Ok(())
    }

    // ---- blobs ----------------------------------------------------------

    pub fn put_blob(&self, bytes: &[u8]) -> Result<BlobHash> {
        if bytes.is_empty() {
            return Err(StoreError::EmptyBlob);
        }
        Ok(self.blobs.put(bytes)?)
    }

    pub fn has_blob(&self, hash: &BlobHash) -> bool {
        self.blobs.contains(hash)
    }

    pub fn blob(&self, hash: &BlobHash) -> Result<Option<Vec<u8>>> {
        Ok(self.blobs.get(hash)?)
    }

    pub fn blob_hashes(&self) -> Vec<BlobHash> {
        self.blobs.hashes()
    }

    /// Pixel dimensions of an image blob, if it decodes as PNG or JPEG.
    pub fn image_dimensions(&self, hash: &BlobHash) -> Option<(u32, u32)> {
        if let Some(cached) = self.dims_cache.lock().unwrap().get(hash) {
            return *cached;
        }
        let dims = self
            .blob(hash)
            .ok()
            .flatten()
            .and_then(|bytes| image_dims(&bytes));
        self.dims_cache.lock().unwrap().insert(hash.clone(), dims);
        dims
    }

    // ---- screenshots & widgets -----------------------------------------

    fn check_screenshot(&self, s: &Screenshot) -> Result<()> {
        if !self.blobs.contains(&s.image_ref) {
            return Err(StoreError::DanglingReference {
                kind: "screenshot",
                id: s.id.to_string(),
            });
        }
        Ok(())
    }

    fn check_widget(&self, w: &Widget) -> Result<()> {
        let records = self.records.read().unwrap();
        if !records.screenshots.contains_key(&w.screenshot_id) || !self.blobs.contains(&w.image_ref)
        {
            return Err(StoreError::DanglingReference {
                kind: "widget",
                id: w.id.to_string(),
            });
        }
        Ok(())
    }

    /// Stores a screenshot record. Re-putting an identical record is a no-op.
    pub fn put_screenshot(&self, mut s: Screenshot) -> Result<ScreenshotId> {
        if s.app_hint.as_deref() == Some("") {
            s.app_hint = None;
        }
        self.check_screenshot(&s)?;
        let mut records = self.records.write().unwrap();
        if let Some(existing) = records.screenshots.get(&s.id) {
            return if *existing == s {
                Ok(s.id)
            } else {
                Err(StoreError::DuplicateId {
                    kind: "screenshot",
                    id: s.id.to_string(),
                })
            };
        }
        self.write(&Record::Screenshot(s.clone()))?;
        let id = s.id.clone();
        records.insert_screenshot(s);
        Ok(id)
    }

    /// Stores a widget record. Re-putting an identical record is a no-op.
    pub fn put_widget(&self, w: Widget) -> Result<WidgetId> {
        self.check_widget(&w)?;
        let mut records = self.records.write().unwrap();
        if let Some(existing) = records.widgets.get(&w.id) {
            return if *existing == w {
                Ok(w.id)
            } else {
                Err(StoreError::DuplicateId {
                    kind: "widget",
                    id: w.id.to_string(),
                })
            };
        }
        self.write(&Record::Widget(w.clone()))?;
        let id = w.id.clone();
        records.insert_widget(w);
        Ok(id)
    }

    pub fn screenshot(&self, id: &ScreenshotId) -> Option<Screenshot> {
        self.records.read().unwrap().screenshots.get(id).cloned()
    }

    pub fn widget(&self, id: &WidgetId) -> Option<Widget> {
        self.records.read().unwrap().widgets.get(id).cloned()
    }

    /// Widgets cropped from one screenshot, ordered by id.
    pub fn list_widgets(&self, screenshot: &ScreenshotId) -> Vec<Widget> {
        let records = self.records.read().unwrap();
        records
            .by_screenshot
            .get(screenshot)
            .into_iter()
            .flatten()
            .filter_map(|id| records.widgets.get(id).cloned())
            .collect()
    }

    // ---- scenario logs --------------------------------------------------

    /// Registers a scenario. Returns `false` if it already existed.
    pub fn register_scenario(&self, scenario: &ScenarioKey) -> Result<bool> {
        if self.logs.read().unwrap().contains_key(scenario) {
            return Ok(false);
        }
        let mut logs = self.logs.write().unwrap();
        if logs.contains_key(scenario) {
            return Ok(false);
        }
        self.write(&Record::Scenario {
            scenario: scenario.clone(),
        })?;
        logs.insert(scenario.clone(), Arc::default());
        Ok(true)
    }

    pub fn has_scenario(&self, scenario: &ScenarioKey) -> bool {
        self.logs.read().unwrap().contains_key(scenario)
    }

    pub fn scenarios(&self) -> Vec<ScenarioKey> {
        self.logs.read().unwrap().keys().cloned().collect()
    }

    fn log(&self, scenario: &ScenarioKey) -> Result<Arc<ScenarioLog>> {
        self.logs
            .read()
            .unwrap()
            .get(scenario)
            .cloned()
            .ok_or_else(|| StoreError::UnknownScenario(scenario.clone()))
    }

    fn log_or_register(&self, scenario: &ScenarioKey) -> Result<Arc<ScenarioLog>> {
        self.register_scenario(scenario)?;
        self.log(scenario)
    }

    /// Appends an add/update event and returns its seq. The scenario is
    /// registered on first use. The event is durable when this returns.
    pub fn append_event(
        &self,
        scenario: &ScenarioKey,
        widget_id: &WidgetId,
        kind: EventKind,
        pose: Pose,
        at_ms: u64,
    ) -> Result<u64> {
        pose.validate()?;
        if !self.records.read().unwrap().widgets.contains_key(widget_id) {
            return Err(StoreError::UnknownWidget(widget_id.clone()));
        }
        let log = self.log_or_register(scenario)?;
        let mut state = log.lock();
        if kind == EventKind::Update && !state.added.contains(widget_id) {
            return Err(StoreError::UpdateBeforeAdd {
                scenario: scenario.clone(),
                widget_id: widget_id.clone(),
            });
        }
        let event = InteractionEvent {
            seq: state.events.len() as u64 + 1,
            scenario: scenario.clone(),
            widget_id: widget_id.clone(),
            kind,
            pose,
            at_ms,
        };
        self.write(&Record::Event(event.clone()))?;
        let seq = event.seq;
        state.push_event(event);
        drop(state);
        log.changed.notify_all();
        Ok(seq)
    }

    /// Appends an event carrying its own seq, which must be the next one.
    /// Used by dataset import to keep seqs and timestamps verbatim.
    pub fn append_event_record(&self, event: InteractionEvent) -> Result<u64> {
        event.pose.validate()?;
        if !self
            .records
            .read()
            .unwrap()
            .widgets
            .contains_key(&event.widget_id)
        {
            return Err(StoreError::UnknownWidget(event.widget_id.clone()));
        }
        let log = self.log_or_register(&event.scenario)?;
        let mut state = log.lock();
        check_event(&state, &event)?;
        self.write(&Record::Event(event.clone()))?;
        let seq = event.seq;
        state.push_event(event);
        drop(state);
        log.changed.notify_all();
        Ok(seq)
    }

    /// Events with seq greater than `since_seq`, in seq order.
    pub fn get_changes(&self, scenario: &ScenarioKey, since_seq: u64) -> Result<ChangeBatch> {
        let log = self.log(scenario)?;
        let state = log.lock();
        Ok(state.changes_since(since_seq))
    }

    /// Like [`Store::get_changes`], but blocks up to `wait` for a new event
    /// when the caller is already caught up.
    pub fn wait_changes(
        &self,
        scenario: &ScenarioKey,
        since_seq: u64,
        wait: Duration,
    ) -> Result<ChangeBatch> {
        let log = self.log(scenario)?;
        let deadline = Instant::now() + wait;
        let mut state = log.lock();
        loop {
            if state.events.len() as u64 > since_seq {
                return Ok(state.changes_since(since_seq));
            }
            let now = Instant::now();
            if now >= deadline {
                return Ok(state.changes_since(since_seq));
            }
            state = log
                .changed
                .wait_timeout(state, deadline - now)
                .expect("scenario log poisoned")
                .0;
        }
    }

    pub fn events(&self, scenario: &ScenarioKey) -> Result<Vec<InteractionEvent>> {
        Ok(self.log(scenario)?.lock().events.clone())
    }

    pub fn max_seq(&self, scenario: &ScenarioKey) -> Result<u64> {
        Ok(self.log(scenario)?.lock().events.len() as u64)
    }

    pub fn layout(&self, scenario: &ScenarioKey) -> Result<Layout> {
        let events = self.events(scenario)?;
        Ok(fold_events(scenario.clone(), &events)?)
    }

    pub fn append_pose_sample(&self, sample: PoseSample) -> Result<()> {
        sample.pose.validate()?;
        let log = self.log_or_register(&sample.scenario)?;
        let mut state = log.lock();
        check_sample(&state, &sample)?;
        self.write(&Record::PoseSample(sample.clone()))?;
        state.samples.push(sample);
        Ok(())
    }

    pub fn pose_trace(&self, scenario: &ScenarioKey) -> Result<Vec<PoseSample>> {
        Ok(self.log(scenario)?.lock().samples.clone())
    }

    // ---- annotations ----------------------------------------------------

    /// Replaces a widget's annotation if `expected_version` matches the
    /// stored version (0 when none exists). Returns the new version.
    pub fn upsert_annotation(
        &self,
        widget_id: &WidgetId,
        body: AnnotationBody,
        expected_version: u64,
    ) -> Result<u64> {
        body.validate(&self.categories)?;
        let mut records = self.records.write().unwrap();
        if !records.widgets.contains_key(widget_id) {
            return Err(StoreError::UnknownWidget(widget_id.clone()));
        }
        let actual = records.annotations.get(widget_id).map_or(0, |a| a.version);
        if actual != expected_version {
            return Err(StoreError::VersionConflict {
                expected: expected_version,
                actual,
            });
        }
        let annotation = Annotation {
            widget_id: widget_id.clone(),
            body,
            version: actual + 1,
        };
        self.write(&Record::Annotation(annotation.clone()))?;
        records.annotations.insert(widget_id.clone(), annotation);
        Ok(actual + 1)
    }

    /// Stores an annotation with its version verbatim (dataset import).
    pub fn restore_annotation(&self, annotation: Annotation) -> Result<()> {
        annotation.body.validate(&self.categories)?;
        let mut records = self.records.write().unwrap();
        if !records.widgets.contains_key(&annotation.widget_id) {
            return Err(StoreError::UnknownWidget(annotation.widget_id.clone()));
        }
        if let Some(existing) = records.annotations.get(&annotation.widget_id) {
            if *existing == annotation {
                return Ok(());
            }
            return Err(StoreError::DuplicateId {
                kind: "annotation",
                id: annotation.widget_id.to_string(),
            });
        }
        self.write(&Record::Annotation(annotation.clone()))?;
        records
            .annotations
            .insert(annotation.widget_id.clone(), annotation);
        Ok(())
    }

    pub fn annotation(&self, widget_id: &WidgetId) -> Option<Annotation> {
        self.records
            .read()
            .unwrap()
            .annotations
            .get(widget_id)
            .cloned()
    }

    // ---- snapshots ------------------------------------------------------

    /// A consistent copy of the whole store. Record tables are read under
    /// one lock, so no half-applied annotation is ever visible.
    pub fn snapshot(&self) -> Dataset {
        let (screenshots, widgets, annotations) = {
            let r = self.records.read().unwrap();
            (
                r.screenshots.clone(),
                r.widgets.clone(),
                r.annotations.clone(),
            )
        };
        let mut scenarios = BTreeMap::new();
        let mut pose_samples = BTreeMap::new();
        for (key, log) in self.logs.read().unwrap().iter() {
            let state = log.lock();
            scenarios.insert(key.clone(), state.events.clone());
            if !state.samples.is_empty() {
                pose_samples.insert(key.clone(), state.samples.clone());
            }
        }
        let image_dims = screenshots
            .values()
            .filter_map(|s| {
                self.image_dimensions(&s.image_ref)
                    .map(|d| (s.image_ref.clone(), d))
            })
            .collect();
        Dataset {
            scenarios,
            screenshots,
            widgets,
            annotations,
            pose_samples,
            image_dims,
        }
    }

    /// Writes the dataset directory (CSV tables, `images/`, `manifest.json`).
    pub fn export_dataset(&self, dir: impl AsRef<Path>) -> Result<DatasetManifest> {
        csvio::export(self, dir.as_ref())
    }

    /// Loads a dataset directory written by [`Store::export_dataset`].
    pub fn import_dataset(&self, dir: impl AsRef<Path>) -> Result<DatasetManifest> {
        csvio::import(self, dir.as_ref())
    }
}

impl Records {
    fn insert_screenshot(&mut self, s: Screenshot) {
        self.screenshots.insert(s.id.clone(), s);
    }

    fn insert_widget(&mut self, w: Widget) {
        self.by_screenshot
            .entry(w.screenshot_id.clone())
            .or_default()
            .insert(w.id.clone());
        self.widgets.insert(w.id.clone(), w);
    }
}

impl LogState {
    fn push_event(&mut self, e: InteractionEvent) {
        if e.kind == EventKind::Add {
            self.added.insert(e.widget_id.clone());
        }
        self.events.push(e);
    }

    fn changes_since(&self, since_seq: u64) -> ChangeBatch {
        let start = (since_seq as usize).min(self.events.len());
        ChangeBatch {
            events: self.events[start..].to_vec(),
            max_seq: self.events.len() as u64,
        }
    }
}

fn check_event(state: &LogState, e: &InteractionEvent) -> Result<()> {
    let expected = state.events.len() as u64 + 1;
    if e.seq != expected {
        return Err(StoreError::SeqConflict {
            scenario: e.scenario.clone(),
            expected,
            found: e.seq,
        });
    }
    if e.kind == EventKind::Update && !state.added.contains(&e.widget_id) {
        return Err(StoreError::UpdateBeforeAdd {
            scenario: e.scenario.clone(),
            widget_id: e.widget_id.clone(),
        });
    }
    Ok(())
}

fn check_sample(state: &LogState, s: &PoseSample) -> Result<()> {
    if let Some(last) = state.samples.last() {
        if s.at_ms < last.at_ms {
            return Err(StoreError::TimestampRegression {
                last: last.at_ms,
                got: s.at_ms,
            });
        }
    }
    Ok(())
}

fn image_dims(bytes: &[u8]) -> Option<(u32, u32)> {
    image::ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .ok()?
        .into_dimensions()
        .ok()
}
