use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::annotation::ActivityType;
use super::event::{EventKind, InteractionEvent};
use super::ids::{ClusterId, WidgetId};
use super::pose::Pose;
use super::scenario::ScenarioKey;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("event {seq}: update for widget `{widget_id}` before any add")]
    UpdateBeforeAdd { seq: u64, widget_id: WidgetId },
    #[error("expected seq {expected}, found {found}")]
    NonMonotonicSeq { expected: u64, found: u64 },
    #[error("event {seq} belongs to scenario {found}, not {expected}")]
    ScenarioMismatch {
        seq: u64,
        expected: ScenarioKey,
        found: ScenarioKey,
    },
}

impl FoldError {
    pub fn code(&self) -> &'static str {
        match self {
            FoldError::UpdateBeforeAdd { .. } => "UpdateBeforeAdd",
            FoldError::NonMonotonicSeq { .. } => "NonMonotonicSeq",
            FoldError::ScenarioMismatch { .. } => "ScenarioMismatch",
        }
    }
}

/// Outcome of applying a single event to a [`Layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Applied,
    /// The event's seq was already folded in; the layout is unchanged.
    Duplicate,
}

/// Widget placements of one scenario as of a given seq.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub scenario: ScenarioKey,
    pub placements: BTreeMap<WidgetId, Pose>,
    pub as_of_seq: u64,
}

impl Layout {
    pub fn empty(scenario: ScenarioKey) -> Self {
        Self {
            scenario,
            placements: BTreeMap::new(),
            as_of_seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    /// Applies one event keyed by seq. Events at or below `as_of_seq` are
    /// ignored, so re-delivered batches are harmless; a gap is an error.
    pub fn apply(&mut self, event: &InteractionEvent) -> Result<Applied, FoldError> {
        if event.scenario != self.scenario {
            return Err(FoldError::ScenarioMismatch {
                seq: event.seq,
                expected: self.scenario.clone(),
                found: event.scenario.clone(),
            });
        }
        if event.seq != 0 && event.seq <= self.as_of_seq {
            return Ok(Applied::Duplicate);
        }
        let expected = self.as_of_seq + 1;
        if event.seq != expected {
            return Err(FoldError::NonMonotonicSeq {
                expected,
                found: event.seq,
            });
        }
        if event.kind == EventKind::Update && !self.placements.contains_key(&event.widget_id) {
            return Err(FoldError::UpdateBeforeAdd {
                seq: event.seq,
                widget_id: event.widget_id.clone(),
            });
        }
        self.placements.insert(event.widget_id.clone(), event.pose);
        self.as_of_seq = event.seq;
        Ok(Applied::Applied)
    }

    /// Applies a batch in order, returning how many events were new.
    pub fn apply_all<'a, I>(&mut self, events: I) -> Result<usize, FoldError>
    where
        I: IntoIterator<Item = &'a InteractionEvent>,
    {
        let mut applied = 0;
        for e in events {
            if self.apply(e)? == Applied::Applied {
                applied += 1;
            }
        }
        Ok(applied)
    }
}

/// Folds a complete log (seqs contiguous from 1) into its layout.
///
/// Unlike [`Layout::apply`], a repeated seq is rejected here: a stored log
/// never contains duplicates.
pub fn fold_events(
    scenario: ScenarioKey,
    events: &[InteractionEvent],
) -> Result<Layout, FoldError> {
    let mut layout = Layout::empty(scenario);
    for e in events {
        let expected = layout.as_of_seq + 1;
        if e.seq != expected {
            return Err(FoldError::NonMonotonicSeq {
                expected,
                found: e.seq,
            });
        }
        layout.apply(e)?;
    }
    Ok(layout)
}

/// Folds the events with `seq <= as_of_seq`.
pub fn fold_prefix(
    scenario: ScenarioKey,
    events: &[InteractionEvent],
    as_of_seq: u64,
) -> Result<Layout, FoldError> {
    let end = events.partition_point(|e| e.seq <= as_of_seq);
    fold_events(scenario, &events[..end])
}

/// A group of widgets within one scenario's layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: ClusterId,
    pub scenario: ScenarioKey,
    pub widget_ids: BTreeSet<WidgetId>,
    pub activity_type: Option<ActivityType>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Quaternion;
    use proptest::prelude::*;

    fn scenario() -> ScenarioKey {
        ScenarioKey::new("p1", "office", "focus work").unwrap()
    }

    fn ev(seq: u64, w: &str, kind: EventKind, x: f64) -> InteractionEvent {
        InteractionEvent {
            seq,
            scenario: scenario(),
            widget_id: w.into(),
            kind,
            pose: Pose::at(x, 0.0, 0.0),
            at_ms: seq * 10,
        }
    }

    /// Independent oracle: for each widget take the highest-seq event, keep
    /// widgets that have at least one add.
    fn brute_force(events: &[InteractionEvent]) -> BTreeMap<WidgetId, Pose> {
        let mut out = BTreeMap::new();
        let widgets: BTreeSet<&WidgetId> = events.iter().map(|e| &e.widget_id).collect();
        for w in widgets {
            let mine: Vec<&InteractionEvent> =
                events.iter().filter(|e| &e.widget_id == w).collect();
            if !mine.iter().any(|e| e.kind == EventKind::Add) {
                continue;
            }
            let last = mine.iter().max_by_key(|e| e.seq).unwrap();
            out.insert(w.clone(), last.pose);
        }
        out
    }

    #[test]
    fn empty_log() {
        let l = fold_events(scenario(), &[]).unwrap();
        assert!(l.is_empty());
        assert_eq!(l.as_of_seq, 0);
    }

    #[test]
    fn last_event_wins() {
        let log = [
            ev(1, "w1", EventKind::Add, 1.0),
            ev(2, "w1", EventKind::Update, 2.0),
        ];
        let l = fold_events(scenario(), &log).unwrap();
        assert_eq!(l.as_of_seq, 2);
        assert_eq!(l.placements.len(), 1);
        assert_eq!(l.placements[&WidgetId::from("w1")], Pose::at(2.0, 0.0, 0.0));
        // one at a time
        let mut step = Layout::empty(scenario());
        for e in &log {
            step.apply(e).unwrap();
        }
        assert_eq!(step, l);
    }

    #[test]
    fn two_widgets() {
        let log = [
            ev(1, "w1", EventKind::Add, 1.0),
            ev(2, "w2", EventKind::Add, 3.0),
            ev(3, "w2", EventKind::Update, 4.0),
        ];
        let l = fold_events(scenario(), &log).unwrap();
        assert_eq!(l.placements, brute_force(&log));
        assert_eq!(l.placements[&WidgetId::from("w1")].position[0], 1.0);
        assert_eq!(l.placements[&WidgetId::from("w2")].position[0], 4.0);
    }

    #[test]
    fn update_before_add() {
        let log = [ev(1, "w1", EventKind::Update, 1.0)];
        assert!(matches!(
            fold_events(scenario(), &log),
            Err(FoldError::UpdateBeforeAdd { seq: 1, .. })
        ));
    }

    #[test]
    fn gaps_and_duplicates_rejected_by_fold() {
        let gap = [
            ev(1, "w1", EventKind::Add, 1.0),
            ev(3, "w1", EventKind::Update, 1.0),
        ];
        assert_eq!(
            fold_events(scenario(), &gap),
            Err(FoldError::NonMonotonicSeq {
                expected: 2,
                found: 3
            })
        );
        let dup = [
            ev(1, "w1", EventKind::Add, 1.0),
            ev(1, "w1", EventKind::Add, 1.0),
        ];
        assert!(fold_events(scenario(), &dup).is_err());
        let zero = [ev(0, "w1", EventKind::Add, 1.0)];
        assert!(fold_events(scenario(), &zero).is_err());
    }

    #[test]
    fn duplicate_trailing_event_is_ignored_by_apply() {
        let log = [
            ev(1, "w1", EventKind::Add, 1.0),
            ev(2, "w1", EventKind::Update, 2.0),
        ];
        let mut l = fold_events(scenario(), &log).unwrap();
        let before = l.clone();
        let mut replay = log[1].clone();
        replay.pose = Pose::at(99.0, 0.0, 0.0);
        assert_eq!(l.apply(&replay), Ok(Applied::Duplicate));
        assert_eq!(l, before);
    }

    #[test]
    fn other_scenario_rejected() {
        let mut e = ev(1, "w1", EventKind::Add, 1.0);
        e.scenario = ScenarioKey::new("p2", "office", "focus work").unwrap();
        assert!(matches!(
            fold_events(scenario(), &[e]),
            Err(FoldError::ScenarioMismatch { .. })
        ));
    }

    #[test]
    fn prefix_fold() {
        let log = [
            ev(1, "w1", EventKind::Add, 1.0),
            ev(2, "w2", EventKind::Add, 2.0),
            ev(3, "w1", EventKind::Update, 5.0),
        ];
        let l = fold_prefix(scenario(), &log, 2).unwrap();
        assert_eq!(l.as_of_seq, 2);
        assert_eq!(l.placements, brute_force(&log[..2]));
    }

    fn arb_log() -> impl Strategy<Value = Vec<InteractionEvent>> {
        prop::collection::vec((0usize..6, any::<bool>(), -5.0f64..5.0), 0..40).prop_map(|raw| {
            let mut added = BTreeSet::new();
            raw.into_iter()
                .enumerate()
                .map(|(i, (w, upd, x))| {
                    let id = format!("w{w}");
                    let kind = if upd && added.contains(&id) {
                        EventKind::Update
                    } else {
                        added.insert(id.clone());
                        EventKind::Add
                    };
                    InteractionEvent {
                        seq: i as u64 + 1,
                        scenario: scenario(),
                        widget_id: id.into(),
                        kind,
                        pose: Pose::new(
                            [x, -x, 0.5],
                            Quaternion::from_axis_angle([0.0, 1.0, 0.0], x),
                        ),
                        at_ms: i as u64,
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn fold_matches_brute_force(log in arb_log()) {
            let l = fold_events(scenario(), &log).unwrap();
            prop_assert_eq!(&l.placements, &brute_force(&log));
            prop_assert_eq!(l.as_of_seq, log.len() as u64);
            prop_assert_eq!(fold_events(scenario(), &log).unwrap(), l);
        }

        #[test]
        fn fold_is_incremental(log in arb_log(), split in 0usize..41) {
            let split = split.min(log.len());
            let mut l = fold_events(scenario(), &log[..split]).unwrap();
            l.apply_all(&log[split..]).unwrap();
            prop_assert_eq!(l, fold_events(scenario(), &log).unwrap());
        }
    }
}
