use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Placement};
use crate::model::{classify_crop, Annotation, CropClass, ScreenshotId, UiType, WidgetId};

use super::distribution::{Distribution, SdConvention, Summary};
use super::AnalysisError;

fn placements_in<'a>(
    placements: &'a [Placement],
    environment: Option<&'a str>,
) -> impl Iterator<Item = &'a Placement> + 'a {
    placements
        .iter()
        .filter(move |p| environment.is_none_or(|e| p.scenario.environment() == e))
}

/// Splits placements into their annotations and the ids of unannotated ones.
fn annotated<'a>(
    ds: &'a Dataset,
    placements: impl Iterator<Item = &'a Placement>,
) -> (Vec<(&'a Placement, &'a Annotation)>, Vec<WidgetId>) {
    let mut found = Vec::new();
    let mut missing = BTreeSet::new();
    for p in placements {
        match ds.annotations.get(&p.widget_id) {
            Some(a) => found.push((p, a)),
            None => {
                missing.insert(p.widget_id.clone());
            }
        }
    }
    (found, missing.into_iter().collect())
}

/// Category counts over annotated placements, with the unannotated ones
/// listed separately.
pub fn category_counts(
    ds: &Dataset,
    environment: Option<&str>,
) -> Result<(Distribution, Vec<WidgetId>), AnalysisError> {
    let placements = ds.placements()?;
    let (found, missing) = annotated(ds, placements_in(&placements, environment));
    let dist = Distribution::from_labels(found.iter().map(|(_, a)| a.body.category.as_str()));
    Ok((dist, missing))
}

/// Share of each category among widget placements, optionally restricted to
/// one environment.
pub fn category_distribution(
    ds: &Dataset,
    environment: Option<&str>,
) -> Result<Distribution, AnalysisError> {
    let (dist, missing) = category_counts(ds, environment)?;
    if !missing.is_empty() {
        return Err(AnalysisError::UnannotatedWidget(missing));
    }
    Ok(dist)
}

pub fn ui_type_counts(
    ds: &Dataset,
    environment: Option<&str>,
) -> Result<(Distribution, Vec<WidgetId>), AnalysisError> {
    let placements = ds.placements()?;
    let (found, missing) = annotated(ds, placements_in(&placements, environment));
    let dist = Distribution::from_labels(
        found
            .iter()
            .flat_map(|(_, a)| a.body.ui_types.iter().map(UiType::as_str)),
    );
    Ok((dist, missing))
}

/// UI-type shares over (placement, type) assignments: a widget carrying k
/// types contributes k assignments.
pub fn ui_type_distribution(
    ds: &Dataset,
    environment: Option<&str>,
) -> Result<Distribution, AnalysisError> {
    let (dist, missing) = ui_type_counts(ds, environment)?;
    if !missing.is_empty() {
        return Err(AnalysisError::UnannotatedWidget(missing));
    }
    Ok(dist)
}

/// Trims, lowercases and collapses internal whitespace.
pub fn normalize_label(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// The `k` most frequent normalized functionality labels among annotated
/// placements; ties broken by label.
pub fn top_functionalities(
    ds: &Dataset,
    environment: Option<&str>,
    k: usize,
) -> Result<Vec<(String, u64)>, AnalysisError> {
    let placements = ds.placements()?;
    let (found, _) = annotated(ds, placements_in(&placements, environment));
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (_, a) in found {
        let label = normalize_label(&a.body.functionality);
        if !label.is_empty() {
            *counts.entry(label).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropStats {
    pub cropped: u64,
    pub whole: u64,
    pub fraction_cropped: f64,
    pub fraction_whole: f64,
}

pub fn crop_statistics(ds: &Dataset) -> Result<CropStats, AnalysisError> {
    let (mut cropped, mut whole) = (0u64, 0u64);
    for p in ds.placements()? {
        let widget = ds
            .widgets
            .get(&p.widget_id)
            .ok_or_else(|| AnalysisError::UnknownWidget(p.widget_id.clone()))?;
        match classify_crop(&widget.crop) {
            CropClass::Cropped => cropped += 1,
            CropClass::Whole => whole += 1,
        }
    }
    let total = (cropped + whole) as f64;
    let frac = |n: u64| if total == 0.0 { 0.0 } else { n as f64 / total };
    Ok(CropStats {
        cropped,
        whole,
        fraction_cropped: frac(cropped),
        fraction_whole: frac(whole),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySplit {
    pub static_count: u64,
    pub dynamic_count: u64,
    pub static_fraction: f64,
    pub dynamic_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticDynamic {
    /// Category distribution among placements in static-task scenarios.
    pub static_side: Distribution,
    /// Category distribution among placements in dynamic-task scenarios.
    pub dynamic_side: Distribution,
    /// For each category, how its placements split between the two.
    pub by_category: BTreeMap<String, CategorySplit>,
}

pub fn static_dynamic_distribution(
    ds: &Dataset,
    task_labels: &BTreeMap<String, TaskKind>,
) -> Result<StaticDynamic, AnalysisError> {
    let placements = ds.placements()?;
    let unlabeled: BTreeSet<String> = placements
        .iter()
        .map(|p| p.scenario.task())
        .filter(|t| !task_labels.contains_key(*t))
        .map(str::to_owned)
        .collect();
    if !unlabeled.is_empty() {
        return Err(AnalysisError::UnlabeledTask(
            unlabeled.into_iter().collect(),
        ));
    }
    let (found, missing) = annotated(ds, placements.iter());
    if !missing.is_empty() {
        return Err(AnalysisError::UnannotatedWidget(missing));
    }
    let mut statics = Vec::new();
    let mut dynamics = Vec::new();
    for (p, a) in &found {
        match task_labels[p.scenario.task()] {
            TaskKind::Static => statics.push(a.body.category.as_str()),
            TaskKind::Dynamic => dynamics.push(a.body.category.as_str()),
        }
    }
    let static_side = Distribution::from_labels(statics);
    let dynamic_side = Distribution::from_labels(dynamics);
    let categories: BTreeSet<&String> = static_side
        .entries
        .keys()
        .chain(dynamic_side.entries.keys())
        .collect();
    let by_category = categories
        .into_iter()
        .map(|c| {
            let s = static_side.count(c);
            let d = dynamic_side.count(c);
            let t = (s + d) as f64;
            (
                c.clone(),
                CategorySplit {
                    static_count: s,
                    dynamic_count: d,
                    static_fraction: s as f64 / t,
                    dynamic_fraction: d as f64 / t,
                },
            )
        })
        .collect();
    Ok(StaticDynamic {
        static_side,
        dynamic_side,
        by_category,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenshotStats {
    /// Screenshots per participant, over participants with at least one.
    pub overall: Summary,
    pub by_environment: BTreeMap<String, Summary>,
    pub by_task: BTreeMap<String, Summary>,
}

/// Screenshots per participant. A screenshot belongs to an environment or
/// task when a widget cropped from it is placed in a scenario of that
/// environment or task.
pub fn screenshot_statistics(
    ds: &Dataset,
    sd: SdConvention,
) -> Result<ScreenshotStats, AnalysisError> {
    let mut overall: BTreeMap<&str, u64> = BTreeMap::new();
    for s in ds.screenshots.values() {
        *overall.entry(s.participant_id.as_str()).or_default() += 1;
    }
    let mut by_env: BTreeMap<&str, BTreeMap<&str, BTreeSet<&ScreenshotId>>> = BTreeMap::new();
    let mut by_task: BTreeMap<&str, BTreeMap<&str, BTreeSet<&ScreenshotId>>> = BTreeMap::new();
    for (key, events) in &ds.scenarios {
        for e in events {
            let Some(widget) = ds.widgets.get(&e.widget_id) else {
                continue;
            };
            let Some(shot) = ds.screenshots.get(&widget.screenshot_id) else {
                continue;
            };
            let owner = shot.participant_id.as_str();
            by_env
                .entry(key.environment())
                .or_default()
                .entry(owner)
                .or_default()
                .insert(&shot.id);
            by_task
                .entry(key.task())
                .or_default()
                .entry(owner)
                .or_default()
                .insert(&shot.id);
        }
    }
    let summarize = |groups: BTreeMap<&str, BTreeMap<&str, BTreeSet<&ScreenshotId>>>| {
        groups
            .into_iter()
            .map(|(g, per)| {
                (
                    g.to_owned(),
                    Summary::of_counts(per.values().map(|s| s.len() as u64), sd),
                )
            })
            .collect()
    };
    Ok(ScreenshotStats {
        overall: Summary::of_counts(overall.values().copied(), sd),
        by_environment: summarize(by_env),
        by_task: summarize(by_task),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCount {
    pub participant_id: String,
    pub environment: String,
    pub task: String,
    pub widgets: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetsPerScenario {
    pub total_widgets: u64,
    pub participants: u64,
    pub layouts: u64,
    /// Placed widgets per participant; the mean is total / participants.
    pub per_participant: Summary,
    /// Placed widgets per layout; the mean is total / layouts.
    pub per_layout: Summary,
    /// One row per layout.
    pub by_scenario: Vec<ScenarioCount>,
    /// Layout sizes grouped by `environment/task`.
    pub by_scenario_type: BTreeMap<String, Summary>,
}

pub fn widgets_per_scenario(
    ds: &Dataset,
    sd: SdConvention,
) -> Result<WidgetsPerScenario, AnalysisError> {
    let layouts = ds.layouts()?;
    let mut per_participant: BTreeMap<&str, u64> = BTreeMap::new();
    let mut by_type: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut rows = Vec::new();
    for l in &layouts {
        let n = l.placements.len() as u64;
        *per_participant
            .entry(l.scenario.participant_id())
            .or_default() += n;
        by_type
            .entry(format!(
                "{}/{}",
                l.scenario.environment(),
                l.scenario.task()
            ))
            .or_default()
            .push(n);
        rows.push(ScenarioCount {
            participant_id: l.scenario.participant_id().to_owned(),
            environment: l.scenario.environment().to_owned(),
            task: l.scenario.task().to_owned(),
            widgets: n,
        });
    }
    Ok(WidgetsPerScenario {
        total_widgets: rows.iter().map(|r| r.widgets).sum(),
        participants: per_participant.len() as u64,
        layouts: layouts.len() as u64,
        per_participant: Summary::of_counts(per_participant.values().copied(), sd),
        per_layout: Summary::of_counts(rows.iter().map(|r| r.widgets), sd),
        by_scenario: rows,
        by_scenario_type: by_type
            .into_iter()
            .map(|(k, v)| (k, Summary::of_counts(v, sd)))
            .collect(),
    })
}
