use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    fold_events, Annotation, BlobHash, EventKind, FoldError, InteractionEvent, Layout, Pose,
    PoseSample, ScenarioKey, Screenshot, ScreenshotId, Widget, WidgetId,
};

/// An immutable snapshot of everything in a store. Analytics, scene export
/// and annotation queries all read from one of these.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub scenarios: BTreeMap<ScenarioKey, Vec<InteractionEvent>>,
    pub screenshots: BTreeMap<ScreenshotId, Screenshot>,
    pub widgets: BTreeMap<WidgetId, Widget>,
    pub annotations: BTreeMap<WidgetId, Annotation>,
    pub pose_samples: BTreeMap<ScenarioKey, Vec<PoseSample>>,
    /// Pixel size of screenshot images that could be decoded.
    pub image_dims: BTreeMap<BlobHash, (u32, u32)>,
}

/// A widget as placed in one scenario's final layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub scenario: ScenarioKey,
    pub widget_id: WidgetId,
    pub pose: Pose,
}

impl Dataset {
    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty() && self.screenshots.is_empty() && self.widgets.is_empty()
    }

    pub fn layout(&self, scenario: &ScenarioKey) -> Option<Result<Layout, FoldError>> {
        self.scenarios
            .get(scenario)
            .map(|events| fold_events(scenario.clone(), events))
    }

    /// Final layouts of every scenario that has at least one event.
    pub fn layouts(&self) -> Result<Vec<Layout>, FoldError> {
        self.scenarios
            .iter()
            .filter(|(_, events)| !events.is_empty())
            .map(|(key, events)| fold_events(key.clone(), events))
            .collect()
    }

    /// Every (scenario, widget) pair in a final layout, ordered by scenario
    /// then widget id.
    pub fn placements(&self) -> Result<Vec<Placement>, FoldError> {
        let mut out = Vec::new();
        for layout in self.layouts()? {
            for (widget_id, pose) in layout.placements {
                out.push(Placement {
                    scenario: layout.scenario.clone(),
                    widget_id,
                    pose,
                });
            }
        }
        Ok(out)
    }

    /// Participants seen in scenarios or screenshots.
    pub fn participants(&self) -> BTreeSet<&str> {
        self.scenarios
            .keys()
            .map(ScenarioKey::participant_id)
            .chain(self.screenshots.values().map(|s| s.participant_id.as_str()))
            .collect()
    }

    /// Appends an event with the next seq for `scenario`. Intended for
    /// building in-memory fixtures; no precondition is checked.
    pub fn push_event(
        &mut self,
        scenario: &ScenarioKey,
        widget_id: impl Into<WidgetId>,
        kind: EventKind,
        pose: Pose,
    ) -> u64 {
        let log = self.scenarios.entry(scenario.clone()).or_default();
        let seq = log.len() as u64 + 1;
        log.push(InteractionEvent {
            seq,
            scenario: scenario.clone(),
            widget_id: widget_id.into(),
            kind,
            pose,
            at_ms: seq,
        });
        seq
    }
}
