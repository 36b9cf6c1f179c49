//! Scripted placement sessions, their transcripts, and the convergence
//! check used to compare a mirrored layout with what was placed.
//!
//! Script JSON:
//!
//! ```json
//! {
//!   "scenario": {"participant_id": "P1", "environment": "office", "task": "work"},
//!   "steps": [
//!     {"at_ms": 0,   "action": "create_widget", "widget": "inbox"},
//!     {"at_ms": 100, "action": "place", "widget": "inbox",
//!      "pose": {"px": 0, "py": 1.4, "pz": -0.8, "qw": 1, "qx": 0, "qy": 0, "qz": 0}},
//!     {"at_ms": 200, "action": "adjust_last", "pose": {...}},
//!     {"at_ms": 300, "action": "reselect", "widget": "inbox", "pose": {...}},
//!     {"at_ms": 400, "action": "pose_sample", "pose": {...}}
//!   ]
//! }
//! ```
//!
//! `widget` names an alias introduced by an earlier `create_widget`, or, if
//! no such alias exists, a widget id already known to the service.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CropRegion, EventKind, InteractionEvent, Layout, Pose, ScenarioKey, WidgetId};

pub const POSITION_TOLERANCE_M: f64 = 1e-6;
pub const ORIENTATION_DOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    CreateWidget {
        widget: String,
        /// Screenshot alias; each distinct alias is uploaded once.
        #[serde(default)]
        screenshot: Option<String>,
        #[serde(default)]
        crop: Option<CropRegion>,
    },
    Place {
        widget: String,
        pose: Pose,
    },
    AdjustLast {
        pose: Pose,
    },
    Reselect {
        widget: String,
        pose: Pose,
    },
    PoseSample {
        pose: Pose,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::CreateWidget { .. } => "create_widget",
            Action::Place { .. } => "place",
            Action::AdjustLast { .. } => "adjust_last",
            Action::Reselect { .. } => "reselect",
            Action::PoseSample { .. } => "pose_sample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub at_ms: u64,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("step {step}: at_ms {at_ms} is earlier than the previous step's {previous}")]
    TimeRegression {
        step: usize,
        at_ms: u64,
        previous: u64,
    },
    #[error("step {step}: widget alias `{alias}` created twice")]
    DuplicateAlias { step: usize, alias: String },
    #[error("step {step}: `{alias}` is placed before it is created")]
    PlaceBeforeCreate { step: usize, alias: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScript {
    pub scenario: ScenarioKey,
    pub steps: Vec<Step>,
}

impl SessionScript {
    pub fn new(scenario: ScenarioKey) -> Self {
        Self {
            scenario,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, at_ms: u64, action: Action) -> &mut Self {
        self.steps.push(Step { at_ms, action });
        self
    }

    /// Checks that time never runs backwards and that every `place` names a
    /// widget created earlier in the script.
    pub fn validate(&self) -> Result<(), ScriptError> {
        let mut created = BTreeSet::new();
        let mut previous = 0;
        for (step, s) in self.steps.iter().enumerate() {
            if s.at_ms < previous {
                return Err(ScriptError::TimeRegression {
                    step,
                    at_ms: s.at_ms,
                    previous,
                });
            }
            previous = s.at_ms;
            match &s.action {
                Action::CreateWidget { widget, .. } => {
                    if !created.insert(widget.as_str()) {
                        return Err(ScriptError::DuplicateAlias {
                            step,
                            alias: widget.clone(),
                        });
                    }
                }
                Action::Place { widget, .. } if !created.contains(widget.as_str()) => {
                    return Err(ScriptError::PlaceBeforeCreate {
                        step,
                        alias: widget.clone(),
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Replays a recorded log against widgets that already exist in the
    /// service: adds become `place`, updates become `reselect`.
    pub fn from_events(scenario: ScenarioKey, events: &[InteractionEvent]) -> Self {
        let steps = events
            .iter()
            .map(|e| Step {
                at_ms: e.at_ms,
                action: match e.kind {
                    EventKind::Add => Action::Place {
                        widget: e.widget_id.to_string(),
                        pose: e.pose,
                    },
                    EventKind::Update => Action::Reselect {
                        widget: e.widget_id.to_string(),
                        pose: e.pose,
                    },
                },
            })
            .collect();
        Self { scenario, steps }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("script serializes");
        s.push('\n');
        s
    }
}

/// What happened at one executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: usize,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widget_id: Option<WidgetId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<EventKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose>,
    /// Seq assigned by the service for placement steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    /// Script alias → id assigned by the service.
    pub widget_ids: BTreeMap<String, WidgetId>,
}

impl Transcript {
    pub fn seqs(&self) -> Vec<Option<u64>> {
        self.entries.iter().map(|e| e.seq).collect()
    }

    /// Layout implied by the acknowledged placement steps: for each widget,
    /// the pose with the highest seq.
    pub fn expected_placements(&self) -> BTreeMap<WidgetId, Pose> {
        let mut best: BTreeMap<&WidgetId, (u64, Pose)> = BTreeMap::new();
        for e in &self.entries {
            if let (Some(w), Some(seq), Some(pose)) = (&e.widget_id, e.seq, e.pose) {
                let slot = best.entry(w).or_insert((seq, pose));
                if seq >= slot.0 {
                    *slot = (seq, pose);
                }
            }
        }
        best.into_iter().map(|(w, (_, p))| (w.clone(), p)).collect()
    }

    pub fn max_seq(&self) -> u64 {
        self.entries.iter().filter_map(|e| e.seq).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub equal: bool,
    pub max_position_delta: f64,
    /// Expected but absent from the mirrored layout.
    pub missing: Vec<WidgetId>,
    /// Present in the mirror but never placed.
    pub extra: Vec<WidgetId>,
    /// Present in both with orientations further apart than tolerated.
    pub orientation_mismatch: Vec<WidgetId>,
}

/// Compares expected placements with a mirrored layout. Orientations are
/// compared by |dot|, so `q` and `-q` count as the same rotation.
pub fn compare_placements(
    expected: &BTreeMap<WidgetId, Pose>,
    actual: &BTreeMap<WidgetId, Pose>,
) -> ConvergenceReport {
    let missing: Vec<WidgetId> = expected
        .keys()
        .filter(|w| !actual.contains_key(*w))
        .cloned()
        .collect();
    let extra: Vec<WidgetId> = actual
        .keys()
        .filter(|w| !expected.contains_key(*w))
        .cloned()
        .collect();
    let mut max_position_delta: f64 = 0.0;
    let mut orientation_mismatch = Vec::new();
    for (w, e) in expected {
        if let Some(a) = actual.get(w) {
            max_position_delta = max_position_delta.max(e.distance_to(a));
            let dot = e
                .orientation
                .normalized()
                .dot(&a.orientation.normalized())
                .abs();
            if dot < 1.0 - ORIENTATION_DOT_TOLERANCE {
                orientation_mismatch.push(w.clone());
            }
        }
    }
    ConvergenceReport {
        equal: missing.is_empty()
            && extra.is_empty()
            && orientation_mismatch.is_empty()
            && max_position_delta <= POSITION_TOLERANCE_M,
        max_position_delta,
        missing,
        extra,
        orientation_mismatch,
    }
}

pub fn check_convergence(transcript: &Transcript, preview: &Layout) -> ConvergenceReport {
    compare_placements(&transcript.expected_placements(), &preview.placements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fold_events, Quaternion};

    fn key() -> ScenarioKey {
        ScenarioKey::new("P1", "office", "work").unwrap()
    }

    fn entry(step: usize, w: &str, seq: u64, pose: Pose) -> TranscriptEntry {
        TranscriptEntry {
            step,
            action: "place".into(),
            widget_id: Some(w.into()),
            kind: Some(EventKind::Add),
            pose: Some(pose),
            seq: Some(seq),
        }
    }

    fn layout(placements: &[(&str, Pose)]) -> Layout {
        let mut l = Layout::empty(key());
        for (w, p) in placements {
            l.placements.insert((*w).into(), *p);
        }
        l
    }

    #[test]
    fn json_round_trip() {
        let mut s = SessionScript::new(key());
        s.push(
            0,
            Action::CreateWidget {
                widget: "a".into(),
                screenshot: Some("home".into()),
                crop: Some(CropRegion::new(0.1, 0.1, 0.5, 0.5).unwrap()),
            },
        )
        .push(
            5,
            Action::Place {
                widget: "a".into(),
                pose: Pose::at(1.0, 2.0, 3.0),
            },
        )
        .push(
            5,
            Action::AdjustLast {
                pose: Pose::at(1.0, 2.0, 3.5),
            },
        )
        .push(
            9,
            Action::PoseSample {
                pose: Pose::at(0.0, 1.6, 0.0),
            },
        );
        let back = SessionScript::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(s.to_json().contains("\"action\": \"adjust_last\""));
        s.validate().unwrap();
    }

    #[test]
    fn validation() {
        let mut s = SessionScript::new(key());
        s.push(
            10,
            Action::CreateWidget {
                widget: "a".into(),
                screenshot: None,
                crop: None,
            },
        );
        s.push(
            5,
            Action::PoseSample {
                pose: Pose::IDENTITY,
            },
        );
        assert!(matches!(
            s.validate(),
            Err(ScriptError::TimeRegression { step: 1, .. })
        ));

        let mut s = SessionScript::new(key());
        s.push(
            0,
            Action::Place {
                widget: "a".into(),
                pose: Pose::IDENTITY,
            },
        );
        assert!(matches!(
            s.validate(),
            Err(ScriptError::PlaceBeforeCreate { step: 0, .. })
        ));

        let mut s = SessionScript::new(key());
        for _ in 0..2 {
            s.push(
                0,
                Action::CreateWidget {
                    widget: "a".into(),
                    screenshot: None,
                    crop: None,
                },
            );
        }
        assert!(matches!(
            s.validate(),
            Err(ScriptError::DuplicateAlias { step: 1, .. })
        ));
    }

    #[test]
    fn from_events_mirrors_kinds() {
        let mut ds = crate::Dataset::default();
        ds.push_event(&key(), "w1", EventKind::Add, Pose::at(0.0, 0.0, 0.0));
        ds.push_event(&key(), "w1", EventKind::Update, Pose::at(1.0, 0.0, 0.0));
        let s = SessionScript::from_events(key(), &ds.scenarios[&key()]);
        assert_eq!(s.steps[0].action.name(), "place");
        assert_eq!(s.steps[1].action.name(), "reselect");
    }

    #[test]
    fn expected_is_last_write_by_seq() {
        let t = Transcript {
            entries: vec![
                entry(0, "w1", 1, Pose::at(0.0, 0.0, 0.0)),
                entry(1, "w2", 2, Pose::at(1.0, 0.0, 0.0)),
                entry(2, "w1", 3, Pose::at(2.0, 0.0, 0.0)),
            ],
            widget_ids: BTreeMap::new(),
        };
        let e = t.expected_placements();
        assert_eq!(e[&WidgetId::from("w1")], Pose::at(2.0, 0.0, 0.0));
        assert_eq!(t.max_seq(), 3);

        // and agrees with the fold of the same events
        let mut ds = crate::Dataset::default();
        ds.push_event(&key(), "w1", EventKind::Add, Pose::at(0.0, 0.0, 0.0));
        ds.push_event(&key(), "w2", EventKind::Add, Pose::at(1.0, 0.0, 0.0));
        ds.push_event(&key(), "w1", EventKind::Update, Pose::at(2.0, 0.0, 0.0));
        let folded = fold_events(key(), &ds.scenarios[&key()]).unwrap();
        assert!(check_convergence(&t, &folded).equal);
    }

    #[test]
    fn identical_layouts_equal() {
        let t = Transcript {
            entries: vec![entry(0, "w1", 1, Pose::at(0.0, 1.0, 0.0))],
            widget_ids: BTreeMap::new(),
        };
        let r = check_convergence(&t, &layout(&[("w1", Pose::at(0.0, 1.0, 0.0))]));
        assert!(r.equal);
        assert_eq!(r.max_position_delta, 0.0);
    }

    #[test]
    fn missing_and_extra_reported() {
        let t = Transcript {
            entries: vec![
                entry(0, "w1", 1, Pose::IDENTITY),
                entry(1, "w2", 2, Pose::IDENTITY),
            ],
            widget_ids: BTreeMap::new(),
        };
        let r = check_convergence(
            &t,
            &layout(&[("w1", Pose::IDENTITY), ("w3", Pose::IDENTITY)]),
        );
        assert!(!r.equal);
        assert_eq!(r.missing, vec![WidgetId::from("w2")]);
        assert_eq!(r.extra, vec![WidgetId::from("w3")]);
    }

    #[test]
    fn millimetre_offset_detected() {
        let t = Transcript {
            entries: vec![entry(0, "w1", 1, Pose::at(0.0, 0.0, 0.0))],
            widget_ids: BTreeMap::new(),
        };
        let r = check_convergence(&t, &layout(&[("w1", Pose::at(1e-3, 0.0, 0.0))]));
        assert!(!r.equal);
        assert!((r.max_position_delta - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn negated_quaternion_is_same_rotation() {
        let q = Quaternion::from_axis_angle([0.0, 1.0, 0.0], 0.7);
        let neg = Quaternion::new(-q.w, -q.x, -q.y, -q.z);
        let p = Pose::new([0.0; 3], q);
        let t = Transcript {
            entries: vec![entry(0, "w1", 1, p)],
            widget_ids: BTreeMap::new(),
        };
        assert!(check_convergence(&t, &layout(&[("w1", Pose::new([0.0; 3], neg))])).equal);
        let turned = Pose::new([0.0; 3], Quaternion::from_axis_angle([0.0, 1.0, 0.0], 0.8));
        let r = check_convergence(&t, &layout(&[("w1", turned)]));
        assert_eq!(r.orientation_mismatch, vec![WidgetId::from("w1")]);
    }
}
