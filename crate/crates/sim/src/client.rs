use std::time::Duration;

use base64::Engine as _;
use layoutminer_core::{
    CropRegion, EventKind, InteractionEvent, Layout, Pose, ScenarioKey, ScreenshotId, WidgetId,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("service unreachable: {0}")]
    Unreachable(String),
    #[error("{code} (HTTP {status}): {message}")]
    Service {
        status: u16,
        code: String,
        message: String,
    },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl SimError {
    pub fn code(&self) -> &str {
        match self {
            SimError::Unreachable(_) => "Unreachable",
            SimError::Service { code, .. } => code,
            SimError::Decode(_) => "Decode",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Changes {
    pub events: Vec<InteractionEvent>,
    pub max_seq: u64,
}

/// Blocking JSON client for the sync endpoints.
#[derive(Clone)]
pub struct Client {
    base: String,
    agent: ureq::Agent,
    client_id: String,
    role: &'static str,
}

#[derive(Deserialize)]
struct ErrorBody {
    error_code: String,
    message: String,
}

fn scenario_path(s: &ScenarioKey) -> String {
    format!(
        "/scenarios/{}/{}/{}",
        url_escape(s.participant_id()),
        url_escape(s.environment()),
        url_escape(s.task())
    )
}

/// Percent-encodes everything outside the unreserved set.
fn url_escape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for b in v.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_connect(Some(Duration::from_secs(5)))
            .build()
            .into();
        Self {
            base: base_url.into().trim_end_matches('/').to_owned(),
            agent,
            client_id: "sim".into(),
            role: "placement",
        }
    }

    /// Same endpoint, acting as a placement client with the given id.
    pub fn placement(&self, client_id: impl Into<String>) -> Self {
        Self {
            client_id: client_id.into(),
            role: "placement",
            ..self.clone()
        }
    }

    pub fn preview(&self, client_id: impl Into<String>) -> Self {
        Self {
            client_id: client_id.into(),
            role: "preview",
            ..self.clone()
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn finish<T: DeserializeOwned>(
        result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<T, SimError> {
        let mut resp = result.map_err(|e| SimError::Unreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| SimError::Unreachable(e.to_string()))?;
        if status >= 400 {
            return Err(match serde_json::from_str::<ErrorBody>(&text) {
                Ok(e) => SimError::Service {
                    status,
                    code: e.error_code,
                    message: e.message,
                },
                Err(_) => SimError::Service {
                    status,
                    code: "Http".into(),
                    message: text,
                },
            });
        }
        serde_json::from_str(&text).map_err(|e| SimError::Decode(format!("{e}: {text}")))
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, SimError> {
        Self::finish(
            self.agent
                .get(format!("{}{path}", self.base))
                .header("x-client-id", &self.client_id)
                .header("x-client-role", self.role)
                .call(),
        )
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: &Value) -> Result<T, SimError> {
        Self::finish(
            self.agent
                .post(format!("{}{path}", self.base))
                .header("x-client-id", &self.client_id)
                .header("x-client-role", self.role)
                .send_json(body),
        )
    }

    pub fn health(&self) -> Result<(), SimError> {
        self.get::<Value>("/health").map(|_| ())
    }

    pub fn register_scenario(&self, s: &ScenarioKey) -> Result<(), SimError> {
        self.post::<Value>(
            "/scenarios",
            &serde_json::to_value(s).expect("key serializes"),
        )
        .map(|_| ())
    }

    pub fn upload_screenshot(
        &self,
        participant_id: &str,
        image: &[u8],
        app_hint: Option<&str>,
        captured_at_ms: u64,
    ) -> Result<ScreenshotId, SimError> {
        let body = json!({
            "participant_id": participant_id,
            "app_hint": app_hint,
            "captured_at_ms": captured_at_ms,
            "image_base64": base64::engine::general_purpose::STANDARD.encode(image),
        });
        let v: Value = self.post("/screenshots", &body)?;
        Ok(ScreenshotId::new(str_field(&v, "screenshot_id")?))
    }

    /// Creates a widget; the service crops its image from the screenshot.
    pub fn create_widget(
        &self,
        screenshot_id: &ScreenshotId,
        crop: CropRegion,
        created_at_ms: u64,
    ) -> Result<WidgetId, SimError> {
        let body = json!({
            "screenshot_id": screenshot_id,
            "crop": crop,
            "created_at_ms": created_at_ms,
        });
        let v: Value = self.post("/widgets", &body)?;
        Ok(WidgetId::new(str_field(&v, "widget_id")?))
    }

    /// `widget_id` is required for adds; an update without it adjusts the
    /// session's last placed widget.
    pub fn post_event(
        &self,
        scenario: &ScenarioKey,
        widget_id: Option<&WidgetId>,
        kind: EventKind,
        pose: Pose,
        at_ms: u64,
    ) -> Result<u64, SimError> {
        let body = json!({"widget_id": widget_id, "kind": kind, "pose": pose, "at_ms": at_ms});
        let v: Value = self.post(&format!("{}/events", scenario_path(scenario)), &body)?;
        v["seq"]
            .as_u64()
            .ok_or_else(|| SimError::Decode(format!("no seq in {v}")))
    }

    pub fn post_pose_sample(
        &self,
        scenario: &ScenarioKey,
        pose: Pose,
        at_ms: u64,
    ) -> Result<(), SimError> {
        let body = json!({"pose": pose, "at_ms": at_ms});
        self.post::<Value>(&format!("{}/pose_samples", scenario_path(scenario)), &body)
            .map(|_| ())
    }

    pub fn changes(
        &self,
        scenario: &ScenarioKey,
        since_seq: u64,
        wait_ms: u64,
    ) -> Result<Changes, SimError> {
        self.get(&format!(
            "{}/changes?since={since_seq}&wait_ms={wait_ms}",
            scenario_path(scenario)
        ))
    }

    pub fn layout(&self, scenario: &ScenarioKey) -> Result<Layout, SimError> {
        self.get(&format!("{}/layout", scenario_path(scenario)))
    }
}

fn str_field(v: &Value, name: &str) -> Result<String, SimError> {
    v[name]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| SimError::Decode(format!("no `{name}` in {v}")))
}
