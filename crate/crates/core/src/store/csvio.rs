//! Dataset directory layout:
//!
//! ```text
//! scenarios.csv  screenshots.csv  widgets.csv  events.csv
//! pose_samples.csv  annotations.csv  manifest.json  images/<sha256>
//! ```
//!
//! Tables use RFC 4180 quoting with CRLF line ends; reals are written with
//! 9 significant digits. Column order is fixed and checked on import.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{
    ActivityType, Annotation, AnnotationBody, BlobHash, ClusterId, CropRegion, EventKind,
    InteractionEvent, Pose, PoseSample, Quaternion, ScenarioKey, Screenshot, UiType, Widget,
};
use crate::numfmt::fmt_real;

use super::{Result, Store, StoreError};

pub const SCHEMA_VERSION: &str = "1";

const SCENARIOS: &str = "scenarios.csv";
const SCREENSHOTS: &str = "screenshots.csv";
const WIDGETS: &str = "widgets.csv";
const EVENTS: &str = "events.csv";
const POSE_SAMPLES: &str = "pose_samples.csv";
const ANNOTATIONS: &str = "annotations.csv";
const MANIFEST: &str = "manifest.json";
const IMAGES: &str = "images";

const SCENARIO_COLS: &[&str] = &["participant_id", "environment", "task"];
const SCREENSHOT_COLS: &[&str] = &[
    "screenshot_id",
    "participant_id",
    "image_hash",
    "app_hint",
    "captured_at_ms",
    "redacted",
];
const WIDGET_COLS: &[&str] = &[
    "widget_id",
    "screenshot_id",
    "crop_x0",
    "crop_y0",
    "crop_x1",
    "crop_y1",
    "image_hash",
    "created_at_ms",
];
const EVENT_COLS: &[&str] = &[
    "scenario_participant",
    "scenario_environment",
    "scenario_task",
    "seq",
    "widget_id",
    "kind",
    "px",
    "py",
    "pz",
    "qw",
    "qx",
    "qy",
    "qz",
    "at_ms",
];
const POSE_SAMPLE_COLS: &[&str] = &[
    "scenario_participant",
    "scenario_environment",
    "scenario_task",
    "px",
    "py",
    "pz",
    "qw",
    "qx",
    "qy",
    "qz",
    "at_ms",
];
const ANNOTATION_COLS: &[&str] = &[
    "widget_id",
    "app_name",
    "screenshot_desc",
    "widget_desc",
    "functionality",
    "excluded_parts",
    "ui_types",
    "category",
    "cluster_id",
    "activity_type",
    "version",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecordCounts {
    pub scenarios: u64,
    pub screenshots: u64,
    pub widgets: u64,
    pub events: u64,
    pub pose_samples: u64,
    pub annotations: u64,
    pub images: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: String,
    pub counts: RecordCounts,
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .quote_style(csv::QuoteStyle::Necessary)
        .from_path(path)
        .map_err(csv_io)
}

fn csv_io(e: csv::Error) -> StoreError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => StoreError::Io(io),
        other => StoreError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn pose_cols(p: &Pose) -> [String; 7] {
    [
        fmt_real(p.position[0]),
        fmt_real(p.position[1]),
        fmt_real(p.position[2]),
        fmt_real(p.orientation.w),
        fmt_real(p.orientation.x),
        fmt_real(p.orientation.y),
        fmt_real(p.orientation.z),
    ]
}

fn scenario_cols(k: &ScenarioKey) -> [String; 3] {
    [
        k.participant_id().to_owned(),
        k.environment().to_owned(),
        k.task().to_owned(),
    ]
}

pub(super) fn export(store: &Store, dir: &Path) -> Result<DatasetManifest> {
    let ds = store.snapshot();
    fs::create_dir_all(dir.join(IMAGES))?;
    let mut counts = RecordCounts::default();

    let mut w = writer(&dir.join(SCENARIOS))?;
    w.write_record(SCENARIO_COLS).map_err(csv_io)?;
    for key in ds.scenarios.keys() {
        w.write_record(scenario_cols(key)).map_err(csv_io)?;
        counts.scenarios += 1;
    }
    w.flush()?;

    let mut w = writer(&dir.join(SCREENSHOTS))?;
    w.write_record(SCREENSHOT_COLS).map_err(csv_io)?;
    for s in ds.screenshots.values() {
        w.write_record([
            s.id.as_str(),
            &s.participant_id,
            s.image_ref.as_str(),
            s.app_hint.as_deref().unwrap_or(""),
            &s.captured_at_ms.to_string(),
            if s.redacted { "1" } else { "0" },
        ])
        .map_err(csv_io)?;
        counts.screenshots += 1;
    }
    w.flush()?;

    let mut w = writer(&dir.join(WIDGETS))?;
    w.write_record(WIDGET_COLS).map_err(csv_io)?;
    for wd in ds.widgets.values() {
        w.write_record([
            wd.id.as_str(),
            wd.screenshot_id.as_str(),
            &fmt_real(wd.crop.x0()),
            &fmt_real(wd.crop.y0()),
            &fmt_real(wd.crop.x1()),
            &fmt_real(wd.crop.y1()),
            wd.image_ref.as_str(),
            &wd.created_at_ms.to_string(),
        ])
        .map_err(csv_io)?;
        counts.widgets += 1;
    }
    w.flush()?;

    let mut w = writer(&dir.join(EVENTS))?;
    w.write_record(EVENT_COLS).map_err(csv_io)?;
    for (key, events) in &ds.scenarios {
        for e in events {
            let mut row: Vec<String> = scenario_cols(key).into();
            row.push(e.seq.to_string());
            row.push(e.widget_id.to_string());
            row.push(e.kind.as_str().to_owned());
            row.extend(pose_cols(&e.pose));
            row.push(e.at_ms.to_string());
            w.write_record(&row).map_err(csv_io)?;
            counts.events += 1;
        }
    }
    w.flush()?;

    let mut w = writer(&dir.join(POSE_SAMPLES))?;
    w.write_record(POSE_SAMPLE_COLS).map_err(csv_io)?;
    for (key, samples) in &ds.pose_samples {
        for s in samples {
            let mut row: Vec<String> = scenario_cols(key).into();
            row.extend(pose_cols(&s.pose));
            row.push(s.at_ms.to_string());
            w.write_record(&row).map_err(csv_io)?;
            counts.pose_samples += 1;
        }
    }
    w.flush()?;

    let mut w = writer(&dir.join(ANNOTATIONS))?;
    w.write_record(ANNOTATION_COLS).map_err(csv_io)?;
    for a in ds.annotations.values() {
        let b = &a.body;
        let ui_types: Vec<&str> = b.ui_types.iter().map(UiType::as_str).collect();
        w.write_record([
            a.widget_id.as_str(),
            &b.app_name,
            &b.screenshot_desc,
            &b.widget_desc,
            &b.functionality,
            &b.excluded_parts,
            &ui_types.join(";"),
            &b.category,
            b.cluster_id.as_ref().map_or("", ClusterId::as_str),
            b.activity_type.as_ref().map_or("", ActivityType::as_str),
            &a.version.to_string(),
        ])
        .map_err(csv_io)?;
        counts.annotations += 1;
    }
    w.flush()?;

    let images = dir.join(IMAGES);
    for hash in store.blob_hashes() {
        let bytes = store
            .blob(&hash)?
            .ok_or_else(|| StoreError::MissingBlob(hash.clone()))?;
        fs::write(images.join(hash.as_str()), bytes)?;
        counts.images += 1;
    }

    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION.to_owned(),
        counts,
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    json.push('\n');
    fs::write(dir.join(MANIFEST), json)?;
    Ok(manifest)
}

struct Table {
    file: &'static str,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(dir: &Path, file: &'static str, cols: &[&str]) -> Result<Self> {
        let mismatch = |detail: String| StoreError::SchemaMismatch {
            file: file.to_owned(),
            detail,
        };
        let path = dir.join(file);
        if !path.exists() {
            return Err(mismatch("file is missing".into()));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&path)
            .map_err(|e| mismatch(e.to_string()))?;
        let header = reader.headers().map_err(|e| mismatch(e.to_string()))?;
        let found: Vec<&str> = header.iter().collect();
        if found != cols {
            return Err(mismatch(format!(
                "expected columns [{}], found [{}]",
                cols.join(","),
                found.join(",")
            )));
        }
        let rows = reader
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| mismatch(e.to_string()))?;
        Ok(Self { file, rows })
    }

    fn err(&self, row: usize, detail: impl std::fmt::Display) -> StoreError {
        StoreError::SchemaMismatch {
            file: self.file.to_owned(),
            detail: format!("row {}: {detail}", row + 1),
        }
    }

    fn real(&self, row: usize, rec: &csv::StringRecord, i: usize) -> Result<f64> {
        rec[i]
            .parse::<f64>()
            .map_err(|e| self.err(row, format!("column {}: {e}", i + 1)))
    }

    fn int(&self, row: usize, rec: &csv::StringRecord, i: usize) -> Result<u64> {
        rec[i]
            .parse::<u64>()
            .map_err(|e| self.err(row, format!("column {}: {e}", i + 1)))
    }

    fn scenario(&self, row: usize, rec: &csv::StringRecord) -> Result<ScenarioKey> {
        ScenarioKey::new(&rec[0], &rec[1], &rec[2]).map_err(|e| self.err(row, e))
    }

    fn pose(&self, row: usize, rec: &csv::StringRecord, at: usize) -> Result<Pose> {
        let v: Vec<f64> = (at..at + 7)
            .map(|i| self.real(row, rec, i))
            .collect::<Result<_>>()?;
        Ok(Pose::new(
            [v[0], v[1], v[2]],
            Quaternion::new(v[3], v[4], v[5], v[6]),
        ))
    }
}

pub(super) fn import(store: &Store, dir: &Path) -> Result<DatasetManifest> {
    if let Ok(text) = fs::read_to_string(dir.join(MANIFEST)) {
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| StoreError::SchemaMismatch {
                file: MANIFEST.to_owned(),
                detail: e.to_string(),
            })?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaMismatch {
                file: MANIFEST.to_owned(),
                detail: format!(
                    "schema version {} is not supported (expected {SCHEMA_VERSION})",
                    manifest.schema_version
                ),
            });
        }
    }
    // Check every header before touching the store.
    let scenarios = Table::read(dir, SCENARIOS, SCENARIO_COLS)?;
    let screenshots = Table::read(dir, SCREENSHOTS, SCREENSHOT_COLS)?;
    let widgets = Table::read(dir, WIDGETS, WIDGET_COLS)?;
    let events = Table::read(dir, EVENTS, EVENT_COLS)?;
    let samples = Table::read(dir, POSE_SAMPLES, POSE_SAMPLE_COLS)?;
    let annotations = Table::read(dir, ANNOTATIONS, ANNOTATION_COLS)?;

    let mut counts = RecordCounts::default();

    let images = dir.join(IMAGES);
    if images.is_dir() {
        let mut names: Vec<_> = fs::read_dir(&images)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        names.sort();
        for path in names {
            let bytes = fs::read(&path)?;
            let hash = store.put_blob(&bytes)?;
            let name = path.file_name().unwrap_or_default().to_string_lossy();
            if hash.as_str() != name {
                return Err(StoreError::SchemaMismatch {
                    file: format!("{IMAGES}/{name}"),
                    detail: format!("content hash is {hash}"),
                });
            }
            counts.images += 1;
        }
    }

    for (i, rec) in scenarios.rows.iter().enumerate() {
        store.register_scenario(&scenarios.scenario(i, rec)?)?;
        counts.scenarios += 1;
    }

    for (i, rec) in screenshots.rows.iter().enumerate() {
        let t = &screenshots;
        let image_ref = BlobHash::new(&rec[2]);
        if !store.has_blob(&image_ref) {
            return Err(StoreError::MissingBlob(image_ref));
        }
        let redacted = match &rec[5] {
            "0" => false,
            "1" => true,
            other => return Err(t.err(i, format!("redacted must be 0 or 1, got `{other}`"))),
        };
        store.put_screenshot(Screenshot {
            id: rec[0].into(),
            participant_id: rec[1].to_owned(),
            image_ref,
            app_hint: (!rec[3].is_empty()).then(|| rec[3].to_owned()),
            captured_at_ms: t.int(i, rec, 4)?,
            redacted,
        })?;
        counts.screenshots += 1;
    }

    for (i, rec) in widgets.rows.iter().enumerate() {
        let t = &widgets;
        let crop = CropRegion::new(
            t.real(i, rec, 2)?,
            t.real(i, rec, 3)?,
            t.real(i, rec, 4)?,
            t.real(i, rec, 5)?,
        )
        .map_err(|e| t.err(i, e))?;
        let image_ref = BlobHash::new(&rec[6]);
        if !store.has_blob(&image_ref) {
            return Err(StoreError::MissingBlob(image_ref));
        }
        store.put_widget(Widget {
            id: rec[0].into(),
            screenshot_id: rec[1].into(),
            crop,
            image_ref,
            created_at_ms: t.int(i, rec, 7)?,
        })?;
        counts.widgets += 1;
    }

    for (i, rec) in events.rows.iter().enumerate() {
        let t = &events;
        let kind: EventKind = rec[5].parse().map_err(|e: String| t.err(i, e))?;
        store.append_event_record(InteractionEvent {
            seq: t.int(i, rec, 3)?,
            scenario: t.scenario(i, rec)?,
            widget_id: rec[4].into(),
            kind,
            pose: t.pose(i, rec, 6)?,
            at_ms: t.int(i, rec, 13)?,
        })?;
        counts.events += 1;
    }

    for (i, rec) in samples.rows.iter().enumerate() {
        let t = &samples;
        store.append_pose_sample(PoseSample {
            scenario: t.scenario(i, rec)?,
            pose: t.pose(i, rec, 3)?,
            at_ms: t.int(i, rec, 10)?,
        })?;
        counts.pose_samples += 1;
    }

    for (i, rec) in annotations.rows.iter().enumerate() {
        let t = &annotations;
        let ui_types: BTreeSet<UiType> = rec[6]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<std::result::Result<_, String>>()
            .map_err(|e| t.err(i, e))?;
        let activity_type = match &rec[9] {
            "" => None,
            s => Some(s.parse().map_err(|e: String| t.err(i, e))?),
        };
        store.restore_annotation(Annotation {
            widget_id: rec[0].into(),
            body: AnnotationBody {
                app_name: rec[1].to_owned(),
                screenshot_desc: rec[2].to_owned(),
                widget_desc: rec[3].to_owned(),
                functionality: rec[4].to_owned(),
                excluded_parts: rec[5].to_owned(),
                ui_types,
                category: rec[7].to_owned(),
                cluster_id: (!rec[8].is_empty()).then(|| ClusterId::new(&rec[8])),
                activity_type,
            },
            version: t.int(i, rec, 10)?,
        })?;
        counts.annotations += 1;
    }

    Ok(DatasetManifest {
        schema_version: SCHEMA_VERSION.to_owned(),
        counts,
    })
}
