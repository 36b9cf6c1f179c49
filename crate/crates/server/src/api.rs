use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::{FromRequest, Path, RawQuery, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use base64::Engine as _;
use layoutminer_core::analysis::SdConvention;
use layoutminer_core::annotate::{self, WidgetQuery};
use layoutminer_core::reconstruct::{self, SceneOptions};
use layoutminer_core::{
    AnnotationBody, BlobHash, ChangeBatch, CropRegion, EventKind, InteractionEvent, Layout, Pose,
    PoseSample, ScenarioKey, Screenshot, ScreenshotId, Store, Widget, WidgetId,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::sync::{ClientRole, SessionContext, SyncService};

pub const CLIENT_ID_HEADER: &str = "x-client-id";
pub const CLIENT_ROLE_HEADER: &str = "x-client-role";

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sync: SyncService,
    next_screenshot: AtomicU64,
    next_widget: AtomicU64,
}

impl AppState {
    pub fn new(store: Arc<Store>) -> Self {
        Self {
            inner: Arc::new(Inner {
                sync: SyncService::new(store),
                next_screenshot: AtomicU64::new(1),
                next_widget: AtomicU64::new(1),
            }),
        }
    }

    pub fn sync(&self) -> &SyncService {
        &self.inner.sync
    }

    pub fn store(&self) -> &Arc<Store> {
        self.inner.sync.store()
    }

    fn fresh_screenshot_id(&self) -> ScreenshotId {
        loop {
            let n = self.inner.next_screenshot.fetch_add(1, Ordering::Relaxed);
            let id = ScreenshotId::new(format!("s{n}"));
            if self.store().screenshot(&id).is_none() {
                return id;
            }
        }
    }

    fn fresh_widget_id(&self) -> WidgetId {
        loop {
            let n = self.inner.next_widget.fetch_add(1, Ordering::Relaxed);
            let id = WidgetId::new(format!("w{n}"));
            if self.store().widget(&id).is_none() {
                return id;
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// JSON body whose rejections use the common error shape.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|rej| ApiError::bad_request(rej.body_text()))
    }
}

/// Store calls may block on fsync or a long poll, so they leave the
/// async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn scenario((p, env, task): (String, String, String)) -> ApiResult<ScenarioKey> {
    Ok(ScenarioKey::new(p, env, task)?)
}

fn params(raw: Option<String>) -> Vec<(String, String)> {
    url::form_urlencoded::parse(raw.unwrap_or_default().as_bytes())
        .into_owned()
        .collect()
}

fn parse_param<T: std::str::FromStr>(name: &str, value: &str) -> ApiResult<T> {
    value
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid value for `{name}`: `{value}`")))
}

fn session(headers: &HeaderMap, scenario: ScenarioKey) -> ApiResult<SessionContext> {
    let get = |name: &str| headers.get(name).and_then(|v| v.to_str().ok());
    let client_role = match get(CLIENT_ROLE_HEADER) {
        None => ClientRole::Placement,
        Some(r) => r.parse().map_err(ApiError::bad_request)?,
    };
    Ok(SessionContext {
        scenario,
        client_role,
        client_id: get(CLIENT_ID_HEADER).unwrap_or("anonymous").to_owned(),
    })
}

fn decode_base64(field: &str, text: &str) -> ApiResult<Vec<u8>> {
    base64::engine::general_purpose::STANDARD
        .decode(text.trim())
        .map_err(|e| ApiError::bad_request(format!("`{field}` is not valid base64: {e}")))
}

// ---- misc ---------------------------------------------------------------

pub async fn health() -> Json<serde_json::Value> {
    Json(json!({ "ok": true }))
}

pub async fn get_blob(State(st): State<AppState>, Path(hash): Path<String>) -> ApiResult<Response> {
    let hash = BlobHash::new(hash);
    let bytes = blocking(move || {
        st.store().blob(&hash)?.ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "MissingBlob",
                format!("no blob {hash}"),
            )
        })
    })
    .await?;
    let mime = match image::guess_format(&bytes) {
        Ok(image::ImageFormat::Png) => "image/png",
        Ok(image::ImageFormat::Jpeg) => "image/jpeg",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

// ---- scenarios ----------------------------------------------------------

pub async fn create_scenario(
    State(st): State<AppState>,
    Body(key): Body<ScenarioKey>,
) -> ApiResult<Json<serde_json::Value>> {
    let created = blocking(move || Ok(st.store().register_scenario(&key)?)).await?;
    Ok(Json(json!({ "ok": true, "created": created })))
}

pub async fn list_scenarios(State(st): State<AppState>) -> Json<Vec<ScenarioKey>> {
    Json(st.store().scenarios())
}

// ---- screenshots & widgets ----------------------------------------------

#[derive(Debug, Deserialize)]
pub struct ScreenshotRequest {
    #[serde(default)]
    pub screenshot_id: Option<ScreenshotId>,
    pub participant_id: String,
    #[serde(default)]
    pub app_hint: Option<String>,
    #[serde(default)]
    pub captured_at_ms: Option<u64>,
    #[serde(default)]
    pub redacted: bool,
    pub image_base64: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScreenshotCreated {
    pub screenshot_id: ScreenshotId,
    pub image_ref: BlobHash,
}

pub async fn create_screenshot(
    State(st): State<AppState>,
    Body(req): Body<ScreenshotRequest>,
) -> ApiResult<(StatusCode, Json<ScreenshotCreated>)> {
    if req.participant_id.is_empty() {
        return Err(ApiError::bad_request("`participant_id` must not be empty"));
    }
    let bytes = decode_base64("image_base64", &req.image_base64)?;
    blocking(move || {
        let store = st.store();
        let image_ref = store.put_blob(&bytes)?;
        let id = req
            .screenshot_id
            .unwrap_or_else(|| st.fresh_screenshot_id());
        let screenshot_id = store.put_screenshot(Screenshot {
            id,
            participant_id: req.participant_id,
            image_ref: image_ref.clone(),
            app_hint: req.app_hint,
            captured_at_ms: req.captured_at_ms.unwrap_or_else(now_ms),
            redacted: req.redacted,
        })?;
        Ok((
            StatusCode::CREATED,
            Json(ScreenshotCreated {
                screenshot_id,
                image_ref,
            }),
        ))
    })
    .await
}

pub async fn get_screenshot(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Screenshot>> {
    st.store()
        .screenshot(&id.as_str().into())
        .map(Json)
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "NotFound",
                format!("no screenshot `{id}`"),
            )
        })
}

pub async fn list_screenshot_widgets(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<Widget>>> {
    let id = ScreenshotId::new(id);
    if st.store().screenshot(&id).is_none() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("no screenshot `{id}`"),
        ));
    }
    Ok(Json(st.store().list_widgets(&id)))
}

#[derive(Debug, Deserialize)]
pub struct WidgetRequest {
    #[serde(default)]
    pub widget_id: Option<WidgetId>,
    pub screenshot_id: ScreenshotId,
    pub crop: CropRegion,
    /// Pre-cropped image. When absent the server crops the screenshot.
    #[serde(default)]
    pub image_base64: Option<String>,
    #[serde(default)]
    pub created_at_ms: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WidgetCreated {
    pub widget_id: WidgetId,
    pub image_ref: BlobHash,
}

/// Cuts `crop` out of an encoded image and re-encodes it as PNG. `None`
/// when the source cannot be decoded.
fn crop_image(source: &[u8], crop: &CropRegion) -> Option<Vec<u8>> {
    let img = image::load_from_memory(source).ok()?;
    let (w, h) = (img.width() as f64, img.height() as f64);
    let x0 = (crop.x0() * w).floor() as u32;
    let y0 = (crop.y0() * h).floor() as u32;
    let x1 = ((crop.x1() * w).ceil() as u32).max(x0 + 1).min(img.width());
    let y1 = ((crop.y1() * h).ceil() as u32)
        .max(y0 + 1)
        .min(img.height());
    if x0 >= x1 || y0 >= y1 {
        return None;
    }
    let part = img.crop_imm(x0, y0, x1 - x0, y1 - y0);
    let mut out = std::io::Cursor::new(Vec::new());
    part.write_to(&mut out, image::ImageFormat::Png).ok()?;
    Some(out.into_inner())
}

pub async fn create_widget(
    State(st): State<AppState>,
    Body(req): Body<WidgetRequest>,
) -> ApiResult<(StatusCode, Json<WidgetCreated>)> {
    let upload = req
        .image_base64
        .as_deref()
        .map(|b| decode_base64("image_base64", b))
        .transpose()?;
    blocking(move || {
        let store = st.store();
        let shot = store.screenshot(&req.screenshot_id).ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "DanglingReference",
                format!("screenshot `{}` does not exist", req.screenshot_id),
            )
        })?;
        let image_ref = match upload {
            Some(bytes) => store.put_blob(&bytes)?,
            None if req.crop.class() == layoutminer_core::CropClass::Whole => {
                shot.image_ref.clone()
            }
            None => {
                let source = store.blob(&shot.image_ref)?.unwrap_or_default();
                match crop_image(&source, &req.crop) {
                    Some(bytes) => store.put_blob(&bytes)?,
                    None => shot.image_ref.clone(),
                }
            }
        };
        let id = req.widget_id.unwrap_or_else(|| st.fresh_widget_id());
        let widget_id = store.put_widget(Widget {
            id,
            screenshot_id: req.screenshot_id,
            crop: req.crop,
            image_ref: image_ref.clone(),
            created_at_ms: req.created_at_ms.unwrap_or_else(now_ms),
        })?;
        Ok((
            StatusCode::CREATED,
            Json(WidgetCreated {
                widget_id,
                image_ref,
            }),
        ))
    })
    .await
}

pub async fn get_widget(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Widget>> {
    let id = WidgetId::new(id);
    st.store().widget(&id).map(Json).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownWidget",
            format!("unknown widget `{id}`"),
        )
    })
}

// ---- events & change feed -----------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct EventRequest {
    /// Required for `add`. For `update`, present means re-selection of that
    /// widget and absent means "adjust the last placed widget".
    #[serde(default)]
    pub widget_id: Option<WidgetId>,
    pub kind: EventKind,
    pub pose: Pose,
    #[serde(default)]
    pub at_ms: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventAck {
    pub seq: u64,
}

pub async fn post_event(
    State(st): State<AppState>,
    Path(path): Path<(String, String, String)>,
    headers: HeaderMap,
    Body(req): Body<EventRequest>,
) -> ApiResult<Json<EventAck>> {
    let ctx = session(&headers, scenario(path)?)?;
    let at_ms = req.at_ms.unwrap_or_else(now_ms);
    let seq = blocking(move || {
        let sync = st.sync();
        Ok(match (req.kind, req.widget_id) {
            (EventKind::Add, Some(w)) => sync.handle_place(&ctx, &w, req.pose, at_ms)?,
            (EventKind::Add, None) => {
                return Err(ApiError::bad_request(
                    "`widget_id` is required for kind `add`",
                ))
            }
            (EventKind::Update, Some(w)) => {
                sync.handle_reselect_update(&ctx, &w, req.pose, at_ms)?
            }
            (EventKind::Update, None) => sync.handle_adjust_last(&ctx, req.pose, at_ms)?,
        })
    })
    .await?;
    Ok(Json(EventAck { seq }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChangesResponse {
    pub events: Vec<InteractionEvent>,
    pub max_seq: u64,
}

impl From<ChangeBatch> for ChangesResponse {
    fn from(b: ChangeBatch) -> Self {
        Self {
            events: b.events,
            max_seq: b.max_seq,
        }
    }
}

pub async fn get_changes(
    State(st): State<AppState>,
    Path(path): Path<(String, String, String)>,
    RawQuery(raw): RawQuery,
) -> ApiResult<Json<ChangesResponse>> {
    let key = scenario(path)?;
    let (mut since, mut wait_ms) = (0u64, 0u64);
    for (k, v) in params(raw) {
        match k.as_str() {
            "since" => since = parse_param(&k, &v)?,
            "wait_ms" => wait_ms = parse_param(&k, &v)?,
            _ => return Err(ApiError::bad_request(format!("unknown parameter `{k}`"))),
        }
    }
    let batch = blocking(move || {
        Ok(st
            .sync()
            .handle_changes(&key, since, Duration::from_millis(wait_ms))?)
    })
    .await?;
    Ok(Json(batch.into()))
}

pub async fn get_layout(
    State(st): State<AppState>,
    Path(path): Path<(String, String, String)>,
) -> ApiResult<Json<Layout>> {
    let key = scenario(path)?;
    Ok(Json(blocking(move || Ok(st.store().layout(&key)?)).await?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PoseSampleRequest {
    pub pose: Pose,
    pub at_ms: u64,
}

pub async fn post_pose_sample(
    State(st): State<AppState>,
    Path(path): Path<(String, String, String)>,
    headers: HeaderMap,
    Body(req): Body<PoseSampleRequest>,
) -> ApiResult<Json<serde_json::Value>> {
    let ctx = session(&headers, scenario(path)?)?;
    blocking(move || Ok(st.sync().handle_pose_sample(&ctx, req.pose, req.at_ms)?)).await?;
    Ok(Json(json!({ "ok": true })))
}

pub async fn get_pose_samples(
    State(st): State<AppState>,
    Path(path): Path<(String, String, String)>,
) -> ApiResult<Json<Vec<PoseSample>>> {
    let key = scenario(path)?;
    Ok(Json(st.store().pose_trace(&key)?))
}

// ---- scenes -------------------------------------------------------------

fn scene_options(pairs: &[(String, String)]) -> ApiResult<(SceneOptions, Option<u64>)> {
    let mut opts = SceneOptions::default();
    let mut as_of = None;
    for (k, v) in pairs {
        match k.as_str() {
            "as_of" => as_of = Some(parse_param(k, v)?),
            "quad_width_m" => opts.quad_width_m = parse_param(k, v)?,
            "flip_normals" => opts.flip_normals = parse_param(k, v)?,
            "overlay" => opts.overlay_refs.push(v.clone()),
            _ => return Err(ApiError::bad_request(format!("unknown parameter `{k}`"))),
        }
    }
    Ok((opts, as_of))
}

pub async fn get_scene(
    State(st): State<AppState>,
    Path(path): Path<(String, String, String)>,
    RawQuery(raw): RawQuery,
) -> ApiResult<Json<reconstruct::SceneFile>> {
    let key = scenario(path)?;
    let (opts, as_of) = scene_options(&params(raw))?;
    blocking(move || {
        let ds = st.store().snapshot();
        Ok(Json(reconstruct::export_scene(&ds, &key, as_of, &opts)?))
    })
    .await
}

pub async fn get_history(
    State(st): State<AppState>,
    Path(path): Path<(String, String, String)>,
    RawQuery(raw): RawQuery,
) -> ApiResult<Json<Vec<reconstruct::SceneFile>>> {
    let key = scenario(path)?;
    let (opts, as_of) = scene_options(&params(raw))?;
    if as_of.is_some() {
        return Err(ApiError::bad_request("`as_of` does not apply to history"));
    }
    blocking(move || {
        let ds = st.store().snapshot();
        Ok(Json(reconstruct::step_history(&ds, &key, &opts)?))
    })
    .await
}

// ---- annotation API -----------------------------------------------------

/// Parses `q`, `filter.<field>`, `sort`, `offset` and `limit`. Empty filter
/// values are ignored; unknown filter fields and parameters are errors.
pub fn widget_query(pairs: &[(String, String)]) -> ApiResult<WidgetQuery> {
    let mut q = WidgetQuery::default();
    for (k, v) in pairs {
        if let Some(field) = k.strip_prefix("filter.") {
            let field = field.parse::<annotate::FilterField>()?;
            if !v.is_empty() {
                q.filters.entry(field).or_default().insert(v.clone());
            }
            continue;
        }
        match k.as_str() {
            "q" => q.q = v.clone(),
            "sort" if v.is_empty() => q.sort = None,
            "sort" => q.sort = Some(v.parse()?),
            "offset" => q.offset = parse_param(k, v)?,
            "limit" => q.limit = parse_param(k, v)?,
            _ => return Err(ApiError::bad_request(format!("unknown parameter `{k}`"))),
        }
    }
    q.validate()?;
    Ok(q)
}

pub async fn api_widgets(
    State(st): State<AppState>,
    RawQuery(raw): RawQuery,
) -> ApiResult<Json<annotate::Page>> {
    let q = widget_query(&params(raw))?;
    blocking(move || Ok(Json(annotate::query_widgets(&st.store().snapshot(), &q)?))).await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotationPut {
    #[serde(flatten)]
    pub body: AnnotationBody,
    pub expected_version: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotationAck {
    pub widget_id: WidgetId,
    pub version: u64,
}

pub async fn put_annotation(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<AnnotationPut>,
) -> ApiResult<Json<AnnotationAck>> {
    let widget_id = WidgetId::new(id);
    blocking(move || {
        let version = st
            .store()
            .upsert_annotation(&widget_id, req.body, req.expected_version)?;
        Ok(Json(AnnotationAck { widget_id, version }))
    })
    .await
}

pub async fn get_annotation(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<layoutminer_core::Annotation>> {
    let id = WidgetId::new(id);
    if st.store().widget(&id).is_none() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownWidget",
            format!("unknown widget `{id}`"),
        ));
    }
    st.store().annotation(&id).map(Json).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("widget `{id}` is not annotated"),
        )
    })
}

pub async fn api_suggest(
    State(st): State<AppState>,
    RawQuery(raw): RawQuery,
) -> ApiResult<Json<Vec<String>>> {
    let (mut field, mut prefix, mut k) = (None, String::new(), 10usize);
    for (key, v) in params(raw) {
        match key.as_str() {
            "field" => field = Some(v),
            "prefix" => prefix = v,
            "k" => k = parse_param(&key, &v)?,
            _ => return Err(ApiError::bad_request(format!("unknown parameter `{key}`"))),
        }
    }
    let field = field.ok_or_else(|| ApiError::bad_request("`field` is required"))?;
    let k = k.min(annotate::MAX_PAGE_LIMIT);
    blocking(move || {
        Ok(Json(annotate::suggest(
            &st.store().snapshot(),
            &field,
            &prefix,
            k,
        )?))
    })
    .await
}

pub async fn api_summary(
    State(st): State<AppState>,
    RawQuery(raw): RawQuery,
) -> ApiResult<Json<annotate::DashboardSummary>> {
    let mut sd = SdConvention::Population;
    for (k, v) in params(raw) {
        match (k.as_str(), v.as_str()) {
            ("sd", "population") => sd = SdConvention::Population,
            ("sd", "sample") => sd = SdConvention::Sample,
            _ => {
                return Err(ApiError::bad_request(format!(
                    "invalid parameter `{k}={v}`"
                )))
            }
        }
    }
    blocking(move || Ok(Json(annotate::summary(&st.store().snapshot(), sd)?))).await
}
