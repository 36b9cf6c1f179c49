//! Placement and preview sessions on top of the store.
//!
//! A placement session remembers the widget it placed last so that
//! `adjust_last` can target it; sessions are keyed by client id and
//! scenario. Preview sessions only read.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use layoutminer_core::{
    ChangeBatch, EventKind, Pose, PoseSample, ScenarioKey, Store, StoreError, WidgetId,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on a single long poll.
pub const MAX_WAIT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientRole {
    Placement,
    Preview,
}

impl ClientRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClientRole::Placement => "placement",
            ClientRole::Preview => "preview",
        }
    }
}

impl fmt::Display for ClientRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClientRole {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "placement" => Ok(ClientRole::Placement),
            "preview" => Ok(ClientRole::Preview),
            other => Err(format!("unknown client role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SessionContext {
    pub scenario: ScenarioKey,
    pub client_role: ClientRole,
    pub client_id: String,
}

impl SessionContext {
    pub fn placement(scenario: ScenarioKey, client_id: impl Into<String>) -> Self {
        Self {
            scenario,
            client_role: ClientRole::Placement,
            client_id: client_id.into(),
        }
    }

    pub fn preview(scenario: ScenarioKey, client_id: impl Into<String>) -> Self {
        Self {
            scenario,
            client_role: ClientRole::Preview,
            client_id: client_id.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("a {0} client cannot place widgets")]
    WrongRole(ClientRole),
    #[error("this session has not placed a widget yet")]
    NoLastWidget,
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl SyncError {
    pub fn code(&self) -> &'static str {
        match self {
            SyncError::WrongRole(_) => "WrongRole",
            SyncError::NoLastWidget => "NoLastWidget",
            SyncError::Store(e) => e.code(),
        }
    }
}

type SessionKey = (String, ScenarioKey);

#[derive(Default)]
struct Session {
    last_placed: Option<WidgetId>,
}

/// The collection endpoint's logic, independent of transport.
pub struct SyncService {
    store: Arc<Store>,
    sessions: Mutex<HashMap<SessionKey, Arc<Mutex<Session>>>>,
}

impl SyncService {
    pub fn new(store: Arc<Store>) -> Self {
        Self {
            store,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    fn session(&self, ctx: &SessionContext) -> Arc<Mutex<Session>> {
        self.sessions
            .lock()
            .unwrap()
            .entry((ctx.client_id.clone(), ctx.scenario.clone()))
            .or_default()
            .clone()
    }

    /// Placement calls need a placement role and a scenario registered up
    /// front, as the experimenter enters it before collection starts.
    fn check_placement(&self, ctx: &SessionContext) -> Result<(), SyncError> {
        if ctx.client_role != ClientRole::Placement {
            return Err(SyncError::WrongRole(ctx.client_role));
        }
        if !self.store.has_scenario(&ctx.scenario) {
            return Err(StoreError::UnknownScenario(ctx.scenario.clone()).into());
        }
        Ok(())
    }

    pub fn handle_place(
        &self,
        ctx: &SessionContext,
        widget_id: &WidgetId,
        pose: Pose,
        at_ms: u64,
    ) -> Result<u64, SyncError> {
        self.check_placement(ctx)?;
        let session = self.session(ctx);
        let mut session = session.lock().unwrap();
        let seq = self
            .store
            .append_event(&ctx.scenario, widget_id, EventKind::Add, pose, at_ms)?;
        session.last_placed = Some(widget_id.clone());
        Ok(seq)
    }

    pub fn handle_adjust_last(
        &self,
        ctx: &SessionContext,
        pose: Pose,
        at_ms: u64,
    ) -> Result<u64, SyncError> {
        self.check_placement(ctx)?;
        let session = self.session(ctx);
        let session = session.lock().unwrap();
        let widget_id = session
            .last_placed
            .as_ref()
            .ok_or(SyncError::NoLastWidget)?;
        Ok(self
            .store
            .append_event(&ctx.scenario, widget_id, EventKind::Update, pose, at_ms)?)
    }

    /// Re-selects an already placed widget and moves it. Does not change
    /// which widget `adjust_last` targets.
    pub fn handle_reselect_update(
        &self,
        ctx: &SessionContext,
        widget_id: &WidgetId,
        pose: Pose,
        at_ms: u64,
    ) -> Result<u64, SyncError> {
        self.check_placement(ctx)?;
        let session = self.session(ctx);
        let _serialized = session.lock().unwrap();
        Ok(self
            .store
            .append_event(&ctx.scenario, widget_id, EventKind::Update, pose, at_ms)?)
    }

    /// Returns at once if there is anything after `since_seq`, otherwise
    /// waits up to `wait` (capped at [`MAX_WAIT`]) for the next event.
    pub fn handle_changes(
        &self,
        scenario: &ScenarioKey,
        since_seq: u64,
        wait: Duration,
    ) -> Result<ChangeBatch, SyncError> {
        Ok(self
            .store
            .wait_changes(scenario, since_seq, wait.min(MAX_WAIT))?)
    }

    pub fn handle_pose_sample(
        &self,
        ctx: &SessionContext,
        pose: Pose,
        at_ms: u64,
    ) -> Result<(), SyncError> {
        if !self.store.has_scenario(&ctx.scenario) {
            return Err(StoreError::UnknownScenario(ctx.scenario.clone()).into());
        }
        Ok(self.store.append_pose_sample(PoseSample {
            scenario: ctx.scenario.clone(),
            pose,
            at_ms,
        })?)
    }
}
