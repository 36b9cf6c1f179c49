//! Portable scene files for viewing a scenario's layout in an external 3D
//! tool, either all at once or step by step through its history.
//!
//! Each widget becomes a textured quad. The quad's width is a fixed option
//! (display size is not recorded at capture time); its height follows the
//! crop's aspect ratio in source-image pixels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::{
    fold_prefix, BlobHash, FoldError, InteractionEvent, Pose, Quaternion, ScenarioKey, WidgetId,
};
use crate::numfmt::round_real;

pub const SCENE_SCHEMA: &str = "layoutminer.scene/1";
pub const SCENE_EXTENSION: &str = ".scene.json";
pub const DEFAULT_QUAD_WIDTH_M: f64 = 0.30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("unknown scenario {0}")]
    UnknownScenario(ScenarioKey),
    #[error("placed widget `{0}` has no widget record")]
    UnknownWidget(WidgetId),
    #[error("quad width must be positive, got {0}")]
    InvalidQuadWidth(f64),
    #[error(transparent)]
    InvalidLog(#[from] FoldError),
}

impl ReconstructError {
    pub fn code(&self) -> &'static str {
        match self {
            ReconstructError::UnknownScenario(_) => "UnknownScenario",
            ReconstructError::UnknownWidget(_) => "UnknownWidget",
            ReconstructError::InvalidQuadWidth(_) => "InvalidQuadWidth",
            ReconstructError::InvalidLog(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneOptions {
    pub quad_width_m: f64,
    /// Rotate every quad half a turn about its local up axis.
    pub flip_normals: bool,
    /// Opaque references (e.g. scan files) copied into the scene.
    pub overlay_refs: Vec<String>,
    /// Screenshot width/height used when the image cannot be decoded.
    pub fallback_screenshot_aspect: f64,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            quad_width_m: DEFAULT_QUAD_WIDTH_M,
            flip_normals: false,
            overlay_refs: Vec::new(),
            fallback_screenshot_aspect: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneWidget {
    pub widget_id: WidgetId,
    pub image_ref: BlobHash,
    pub pose: Pose,
    pub width_m: f64,
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub schema: String,
    pub scenario: ScenarioKey,
    pub as_of_seq: u64,
    pub quad_width_m: f64,
    pub flip_normals: bool,
    pub widgets: Vec<SceneWidget>,
    pub overlay_refs: Vec<String>,
}

impl SceneFile {
    /// Canonical JSON form; equal scenes produce identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scene serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn rounded_pose(p: &Pose) -> Pose {
    Pose::new(
        p.position.map(round_real),
        Quaternion::new(
            round_real(p.orientation.w),
            round_real(p.orientation.x),
            round_real(p.orientation.y),
            round_real(p.orientation.z),
        ),
    )
}

/// Half turn about local +Y.
const FLIP: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);

fn scene_at(
    ds: &Dataset,
    scenario: &ScenarioKey,
    events: &[InteractionEvent],
    as_of_seq: u64,
    opts: &SceneOptions,
) -> Result<SceneFile, ReconstructError> {
    if opts.quad_width_m.is_nan() || opts.quad_width_m <= 0.0 {
        return Err(ReconstructError::InvalidQuadWidth(opts.quad_width_m));
    }
    let layout = fold_prefix(scenario.clone(), events, as_of_seq)?;
    let mut widgets = Vec::with_capacity(layout.placements.len());
    for (id, pose) in &layout.placements {
        let widget = ds
            .widgets
            .get(id)
            .ok_or_else(|| ReconstructError::UnknownWidget(id.clone()))?;
        let screen_aspect = ds
            .screenshots
            .get(&widget.screenshot_id)
            .and_then(|s| ds.image_dims.get(&s.image_ref))
            .map(|(w, h)| *w as f64 / *h as f64)
            .unwrap_or(opts.fallback_screenshot_aspect);
        let aspect = widget.crop.width() / widget.crop.height() * screen_aspect;
        let mut pose = *pose;
        if opts.flip_normals {
            pose.orientation = pose.orientation.mul(&FLIP);
        }
        widgets.push(SceneWidget {
            widget_id: id.clone(),
            image_ref: widget.image_ref.clone(),
            pose: rounded_pose(&pose),
            width_m: round_real(opts.quad_width_m),
            height_m: round_real(opts.quad_width_m / aspect),
        });
    }
    Ok(SceneFile {
        schema: SCENE_SCHEMA.to_owned(),
        scenario: scenario.clone(),
        as_of_seq: layout.as_of_seq,
        quad_width_m: round_real(opts.quad_width_m),
        flip_normals: opts.flip_normals,
        widgets,
        overlay_refs: opts.overlay_refs.clone(),
    })
}

/// The scene of `scenario` after its events up to `as_of_seq` (default: all).
pub fn export_scene(
    ds: &Dataset,
    scenario: &ScenarioKey,
    as_of_seq: Option<u64>,
    opts: &SceneOptions,
) -> Result<SceneFile, ReconstructError> {
    let events = ds
        .scenarios
        .get(scenario)
        .ok_or_else(|| ReconstructError::UnknownScenario(scenario.clone()))?;
    let max = events.len() as u64;
    scene_at(
        ds,
        scenario,
        events,
        as_of_seq.unwrap_or(max).min(max),
        opts,
    )
}

/// One scene per event: element `k` (0-based) shows the layout after seq `k + 1`.
pub fn step_history(
    ds: &Dataset,
    scenario: &ScenarioKey,
    opts: &SceneOptions,
) -> Result<Vec<SceneFile>, ReconstructError> {
    let events = ds
        .scenarios
        .get(scenario)
        .ok_or_else(|| ReconstructError::UnknownScenario(scenario.clone()))?;
    (1..=events.len() as u64)
        .map(|seq| scene_at(ds, scenario, events, seq, opts))
        .collect()
}
