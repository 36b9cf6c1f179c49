//! `analyze` reports: each is one JSON document computed from a snapshot.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use clap::ValueEnum;
use layoutminer_core::analysis::{self, ClusterSource, SdConvention, TaskKind};
use layoutminer_core::annotate;
use layoutminer_core::Dataset;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Report {
    /// Headline counts.
    Overview,
    /// Category shares among placed widgets.
    Categories,
    /// UI-type shares over type assignments.
    UiTypes,
    /// Most frequent functionality labels.
    Functionalities,
    /// Cropped vs whole-screenshot widgets.
    Crops,
    /// Cluster counts and size statistics.
    Clusters,
    /// Activity-type split over clusters.
    Activities,
    /// Category split between static and dynamic tasks.
    StaticDynamic,
    /// Screenshots per participant.
    Screenshots,
    /// Widgets per participant, layout and scenario type.
    WidgetsPerScenario,
    /// The dashboard payload.
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterMode {
    Annotated,
    Computed,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub environment: Option<String>,
    pub threshold_m: f64,
    pub clusters: ClusterMode,
    pub sd: SdConvention,
    pub top_k: usize,
    pub task_kinds: BTreeMap<String, TaskKind>,
}

impl ReportOptions {
    fn source(&self) -> ClusterSource {
        match self.clusters {
            ClusterMode::Annotated => ClusterSource::Annotated,
            ClusterMode::Computed => ClusterSource::Computed(self.threshold_m),
        }
    }
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn analyze(ds: &Dataset, report: Report, opts: &ReportOptions) -> Result<Value> {
    if ds.is_empty() {
        bail!("no data");
    }
    let env = opts.environment.as_deref();
    let v = match report {
        Report::Overview => to_value(analysis::overview(ds)?),
        Report::Categories => {
            let (dist, unannotated) = analysis::category_counts(ds, env)?;
            json!({ "environment": env, "distribution": dist, "unannotated": unannotated })
        }
        Report::UiTypes => {
            let (dist, unannotated) = analysis::ui_type_counts(ds, env)?;
            json!({ "environment": env, "distribution": dist, "unannotated": unannotated })
        }
        Report::Functionalities => {
            let top = analysis::top_functionalities(ds, env, opts.top_k)?;
            let rows: Vec<Value> = top
                .into_iter()
                .map(|(label, count)| json!({ "functionality": label, "count": count }))
                .collect();
            json!({ "environment": env, "top": rows })
        }
        Report::Crops => to_value(analysis::crop_statistics(ds)?),
        Report::Clusters => json!({
            "source": opts.source(),
            "statistics": analysis::cluster_statistics(ds, opts.source(), opts.sd)?,
        }),
        Report::Activities => {
            let clusters = analysis::clusters(ds, opts.source())?;
            json!({
                "source": opts.source(),
                "breakdown": analysis::activity_breakdown_of(&clusters)?,
            })
        }
        Report::StaticDynamic => {
            to_value(analysis::static_dynamic_distribution(ds, &opts.task_kinds)?)
        }
        Report::Screenshots => to_value(analysis::screenshot_statistics(ds, opts.sd)?),
        Report::WidgetsPerScenario => to_value(analysis::widgets_per_scenario(ds, opts.sd)?),
        Report::Summary => to_value(annotate::summary(ds, opts.sd)?),
    };
    Ok(v)
}
