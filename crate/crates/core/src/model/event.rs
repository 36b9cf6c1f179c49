use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ids::WidgetId;
use super::pose::Pose;
use super::scenario::ScenarioKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Add,
    Update,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Add => "add",
            EventKind::Update => "update",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "add" => Ok(EventKind::Add),
            "update" => Ok(EventKind::Update),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// One add/update record in a scenario's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub seq: u64,
    pub scenario: ScenarioKey,
    pub widget_id: WidgetId,
    pub kind: EventKind,
    pub pose: Pose,
    pub at_ms: u64,
}

/// Participant head/device pose at a point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub scenario: ScenarioKey,
    pub pose: Pose,
    pub at_ms: u64,
}
