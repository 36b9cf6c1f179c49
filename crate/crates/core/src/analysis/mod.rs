//! Deterministic aggregates over a [`Dataset`] snapshot.
//!
//! "Widgets" are counted as placements: a widget reused in two scenarios
//! counts once per scenario layout it appears in.

mod cluster;
mod distribution;
mod stats;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::{FoldError, WidgetId};

pub use cluster::{
    activity_breakdown, activity_breakdown_of, cluster_layout, cluster_statistics,
    cluster_statistics_of, clusters, ActivityBreakdown, ClusterSource, ClusterStats,
    DEFAULT_CLUSTER_THRESHOLD_M,
};
pub use distribution::{DistEntry, Distribution, SdConvention, Summary};
pub use stats::{
    category_counts, category_distribution, crop_statistics, normalize_label,
    screenshot_statistics, static_dynamic_distribution, top_functionalities, ui_type_counts,
    ui_type_distribution, widgets_per_scenario, CategorySplit, CropStats, ScenarioCount,
    ScreenshotStats, StaticDynamic, TaskKind, WidgetsPerScenario,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{} placed widget(s) lack an annotation: {}", .0.len(), join(.0))]
    UnannotatedWidget(Vec<WidgetId>),
    #[error("no clusters to summarize")]
    NoClusters,
    #[error("clusters without an activity type: {}", .0.join(", "))]
    MissingActivityType(Vec<String>),
    #[error("tasks without a static/dynamic label: {}", .0.join(", "))]
    UnlabeledTask(Vec<String>),
    #[error("cluster threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("placed widget `{0}` has no widget record")]
    UnknownWidget(WidgetId),
    #[error(transparent)]
    InvalidLog(#[from] FoldError),
}

fn join(ids: &[WidgetId]) -> String {
    ids.iter()
        .map(WidgetId::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::UnannotatedWidget(_) => "UnannotatedWidget",
            AnalysisError::NoClusters => "NoClusters",
            AnalysisError::MissingActivityType(_) => "MissingActivityType",
            AnalysisError::UnlabeledTask(_) => "UnlabeledTask",
            AnalysisError::InvalidThreshold(_) => "InvalidThreshold",
            AnalysisError::UnknownWidget(_) => "UnknownWidget",
            AnalysisError::InvalidLog(e) => e.code(),
        }
    }
}

/// Headline counts of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overview {
    pub participants: u64,
    pub layouts: u64,
    pub widgets: u64,
    pub screenshots: u64,
    /// Distinct normalized app names among annotations.
    pub unique_apps: u64,
    pub annotated_widgets: u64,
    pub unannotated_widgets: u64,
}

pub fn overview(ds: &Dataset) -> Result<Overview, AnalysisError> {
    let placements = ds.placements()?;
    let layouts = ds.layouts()?;
    let annotated = placements
        .iter()
        .filter(|p| ds.annotations.contains_key(&p.widget_id))
        .count() as u64;
    let apps: BTreeSet<String> = ds
        .annotations
        .values()
        .map(|a| normalize_label(&a.body.app_name))
        .filter(|a| !a.is_empty())
        .collect();
    let participants: BTreeSet<&str> = layouts
        .iter()
        .map(|l| l.scenario.participant_id())
        .collect();
    Ok(Overview {
        participants: participants.len() as u64,
        layouts: layouts.len() as u64,
        widgets: placements.len() as u64,
        screenshots: ds.screenshots.len() as u64,
        unique_apps: apps.len() as u64,
        annotated_widgets: annotated,
        unannotated_widgets: placements.len() as u64 - annotated,
    })
}
