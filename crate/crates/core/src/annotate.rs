//! Read side of the annotation workflow: the searchable widget table,
//! autocompletion and the dashboard payload. Writes go through
//! [`Store::upsert_annotation`](crate::Store::upsert_annotation).
//!
//! Everything here is a pure function of a [`Dataset`] snapshot, so a query
//! never sees a half-applied write.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    category_counts, overview, screenshot_statistics, ui_type_counts, widgets_per_scenario,
    AnalysisError, Distribution, Overview, ScreenshotStats, SdConvention, WidgetsPerScenario,
};
use crate::dataset::Dataset;
use crate::model::{
    Annotation, BlobHash, CropRegion, FoldError, ScenarioKey, ScreenshotId, TextField, WidgetId,
};

pub const MAX_PAGE_LIMIT: usize = 500;
pub const DEFAULT_PAGE_LIMIT: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("cannot sort by `{0}`; allowed: {allowed}", allowed = SortField::ALL.map(|f| f.as_str()).join(", "))]
    InvalidSortField(String),
    #[error("cannot filter by `{0}`; allowed: {allowed}", allowed = FilterField::ALL.map(|f| f.as_str()).join(", "))]
    InvalidFilterField(String),
    #[error("limit must be in 1..={MAX_PAGE_LIMIT}, got {0}")]
    InvalidLimit(usize),
    #[error("`{0}` is not a text annotation field")]
    InvalidField(String),
    #[error(transparent)]
    InvalidLog(#[from] FoldError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl QueryError {
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::InvalidSortField(_) => "InvalidSortField",
            QueryError::InvalidFilterField(_) => "InvalidFilterField",
            QueryError::InvalidLimit(_) => "InvalidLimit",
            QueryError::InvalidField(_) => "InvalidField",
            QueryError::InvalidLog(e) => e.code(),
            QueryError::Analysis(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterField {
    Environment,
    Task,
    Participant,
    Category,
    UiType,
    AppName,
}

impl FilterField {
    pub const ALL: [FilterField; 6] = [
        FilterField::Environment,
        FilterField::Task,
        FilterField::Participant,
        FilterField::Category,
        FilterField::UiType,
        FilterField::AppName,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FilterField::Environment => "environment",
            FilterField::Task => "task",
            FilterField::Participant => "participant",
            FilterField::Category => "category",
            FilterField::UiType => "ui_type",
            FilterField::AppName => "app_name",
        }
    }
}

impl FromStr for FilterField {
    type Err = QueryError;
    fn from_str(s: &str) -> Result<Self, QueryError> {
        FilterField::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| QueryError::InvalidFilterField(s.to_owned()))
    }
}

/// Columns the table can be sorted by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortField {
    WidgetId,
    Participant,
    Environment,
    Task,
    Category,
    AppName,
    Functionality,
    CreatedAt,
    Version,
}

impl SortField {
    pub const ALL: [SortField; 9] = [
        SortField::WidgetId,
        SortField::Participant,
        SortField::Environment,
        SortField::Task,
        SortField::Category,
        SortField::AppName,
        SortField::Functionality,
        SortField::CreatedAt,
        SortField::Version,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SortField::WidgetId => "widget_id",
            SortField::Participant => "participant",
            SortField::Environment => "environment",
            SortField::Task => "task",
            SortField::Category => "category",
            SortField::AppName => "app_name",
            SortField::Functionality => "functionality",
            SortField::CreatedAt => "created_at",
            SortField::Version => "version",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortDir {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortSpec {
    pub field: SortField,
    pub dir: SortDir,
}

impl FromStr for SortSpec {
    type Err = QueryError;

    /// `field` or `field:asc` / `field:desc`.
    fn from_str(s: &str) -> Result<Self, QueryError> {
        let bad = || QueryError::InvalidSortField(s.to_owned());
        let (name, dir) = match s.split_once(':') {
            None => (s, SortDir::Asc),
            Some((n, "asc")) => (n, SortDir::Asc),
            Some((n, "desc")) => (n, SortDir::Desc),
            Some(_) => return Err(bad()),
        };
        let field = SortField::ALL
            .into_iter()
            .find(|f| f.as_str() == name)
            .ok_or_else(bad)?;
        Ok(SortSpec { field, dir })
    }
}

impl fmt::Display for SortSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.dir {
            SortDir::Asc => "asc",
            SortDir::Desc => "desc",
        };
        write!(f, "{}:{dir}", self.field.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetQuery {
    /// Case-insensitive substring matched against the free-text annotation
    /// fields. Empty matches everything.
    pub q: String,
    /// Values within a field are alternatives; fields are all required.
    pub filters: BTreeMap<FilterField, BTreeSet<String>>,
    pub sort: Option<SortSpec>,
    pub offset: usize,
    pub limit: usize,
}

impl Default for WidgetQuery {
    fn default() -> Self {
        Self {
            q: String::new(),
            filters: BTreeMap::new(),
            sort: None,
            offset: 0,
            limit: DEFAULT_PAGE_LIMIT,
        }
    }
}

impl WidgetQuery {
    /// Adds one accepted value for a filter field given by name.
    pub fn filter(mut self, field: &str, value: impl Into<String>) -> Result<Self, QueryError> {
        let field: FilterField = field.parse()?;
        self.filters.entry(field).or_default().insert(value.into());
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if !(1..=MAX_PAGE_LIMIT).contains(&self.limit) {
            return Err(QueryError::InvalidLimit(self.limit));
        }
        Ok(())
    }
}

/// One table row: a widget in one scenario's final layout. Widgets that are
/// not placed anywhere get a single row without a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetRow {
    pub widget_id: WidgetId,
    pub screenshot_id: ScreenshotId,
    pub participant_id: String,
    pub environment: Option<String>,
    pub task: Option<String>,
    pub image_ref: BlobHash,
    pub crop: CropRegion,
    pub created_at_ms: u64,
    pub annotation: Option<Annotation>,
    /// 0 when unannotated; the `expected_version` for the next write.
    pub version: u64,
}

impl WidgetRow {
    fn scenario_sort_key(&self) -> (Option<&str>, Option<&str>, &str) {
        (
            self.environment.as_deref(),
            self.task.as_deref(),
            &self.participant_id,
        )
    }

    fn matches(&self, q: &WidgetQuery, needle: &str) -> bool {
        let text = |f: TextField| self.annotation.as_ref().map(|a| a.body.text(f));
        for (field, values) in &q.filters {
            let ok = match field {
                FilterField::Environment => self
                    .environment
                    .as_ref()
                    .is_some_and(|e| values.contains(e)),
                FilterField::Task => self.task.as_ref().is_some_and(|t| values.contains(t)),
                FilterField::Participant => values.contains(&self.participant_id),
                FilterField::Category => self
                    .annotation
                    .as_ref()
                    .is_some_and(|a| values.contains(&a.body.category)),
                FilterField::UiType => self
                    .annotation
                    .as_ref()
                    .is_some_and(|a| a.body.ui_types.iter().any(|u| values.contains(u.as_str()))),
                FilterField::AppName => {
                    text(TextField::AppName).is_some_and(|n| values.contains(n))
                }
            };
            if !ok {
                return false;
            }
        }
        needle.is_empty()
            || self.annotation.as_ref().is_some_and(|a| {
                a.body
                    .text_fields()
                    .iter()
                    .any(|(_, t)| t.to_lowercase().contains(needle))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SortKey<'a> {
    Text(Option<&'a str>),
    Num(u64),
}

fn sort_key(row: &WidgetRow, field: SortField) -> SortKey<'_> {
    let ann = row.annotation.as_ref();
    match field {
        SortField::WidgetId => SortKey::Text(Some(row.widget_id.as_str())),
        SortField::Participant => SortKey::Text(Some(&row.participant_id)),
        SortField::Environment => SortKey::Text(row.environment.as_deref()),
        SortField::Task => SortKey::Text(row.task.as_deref()),
        SortField::Category => SortKey::Text(ann.map(|a| a.body.category.as_str())),
        SortField::AppName => SortKey::Text(ann.map(|a| a.body.app_name.as_str())),
        SortField::Functionality => SortKey::Text(ann.map(|a| a.body.functionality.as_str())),
        SortField::CreatedAt => SortKey::Num(row.created_at_ms),
        SortField::Version => SortKey::Num(row.version),
    }
}

/// Every row of the table, unfiltered, in widget-id order.
pub fn widget_rows(ds: &Dataset) -> Result<Vec<WidgetRow>, QueryError> {
    let mut placed: BTreeMap<&WidgetId, Vec<&ScenarioKey>> = BTreeMap::new();
    let layouts = ds.layouts()?;
    for l in &layouts {
        for w in l.placements.keys() {
            placed.entry(w).or_default().push(&l.scenario);
        }
    }
    let mut rows = Vec::new();
    for (id, w) in &ds.widgets {
        let annotation = ds.annotations.get(id).cloned();
        let version = annotation.as_ref().map_or(0, |a| a.version);
        let owner = ds
            .screenshots
            .get(&w.screenshot_id)
            .map(|s| s.participant_id.clone())
            .unwrap_or_default();
        let row = |scenario: Option<&ScenarioKey>| WidgetRow {
            widget_id: id.clone(),
            screenshot_id: w.screenshot_id.clone(),
            participant_id: scenario.map_or(owner.clone(), |s| s.participant_id().to_owned()),
            environment: scenario.map(|s| s.environment().to_owned()),
            task: scenario.map(|s| s.task().to_owned()),
            image_ref: w.image_ref.clone(),
            crop: w.crop,
            created_at_ms: w.created_at_ms,
            annotation: annotation.clone(),
            version,
        };
        match placed.get(id) {
            Some(scenarios) => rows.extend(scenarios.iter().map(|s| row(Some(s)))),
            None => rows.push(row(None)),
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub rows: Vec<WidgetRow>,
    pub total_count: u64,
    pub offset: usize,
    pub limit: usize,
}

/// Filters, searches, sorts and pages the widget table.
///
/// Order is total: the sort key, then widget id, then scenario. Paging a
/// fixed query over an unchanged dataset therefore visits every match once.
pub fn query_widgets(ds: &Dataset, q: &WidgetQuery) -> Result<Page, QueryError> {
    q.validate()?;
    let needle = q.q.to_lowercase();
    let mut rows: Vec<WidgetRow> = widget_rows(ds)?
        .into_iter()
        .filter(|r| r.matches(q, &needle))
        .collect();
    let primary = |a: &WidgetRow, b: &WidgetRow| match q.sort {
        None => Ordering::Equal,
        Some(SortSpec { field, dir }) => {
            let o = sort_key(a, field).cmp(&sort_key(b, field));
            match dir {
                SortDir::Asc => o,
                SortDir::Desc => o.reverse(),
            }
        }
    };
    rows.sort_by(|a, b| {
        primary(a, b)
            .then_with(|| a.widget_id.cmp(&b.widget_id))
            .then_with(|| a.scenario_sort_key().cmp(&b.scenario_sort_key()))
    });
    let total_count = rows.len() as u64;
    let rows = rows.into_iter().skip(q.offset).take(q.limit).collect();
    Ok(Page {
        rows,
        total_count,
        offset: q.offset,
        limit: q.limit,
    })
}

/// Up to `k` distinct existing values of a text field starting with
/// `prefix` (case-insensitively), most frequent first, ties alphabetical.
pub fn suggest(
    ds: &Dataset,
    field: &str,
    prefix: &str,
    k: usize,
) -> Result<Vec<String>, QueryError> {
    let field: TextField = field
        .parse()
        .map_err(|_| QueryError::InvalidField(field.to_owned()))?;
    let prefix = prefix.to_lowercase();
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for a in ds.annotations.values() {
        let v = a.body.text(field);
        if !v.is_empty() && v.to_lowercase().starts_with(&prefix) {
            *counts.entry(v).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(v, _)| v.to_owned())
        .collect())
}

/// The dashboard payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardSummary {
    pub overview: Overview,
    pub screenshots: ScreenshotStats,
    /// Over annotated placements; absent when there are none.
    pub category_distribution: Option<Distribution>,
    pub ui_type_distribution: Option<Distribution>,
    pub widgets_per_scenario: WidgetsPerScenario,
    /// Placements left out of the distributions for lack of an annotation.
    pub unannotated_widgets: u64,
}

pub fn summary(ds: &Dataset, sd: SdConvention) -> Result<DashboardSummary, QueryError> {
    let nonempty = |d: Distribution| (!d.is_empty()).then_some(d);
    let overview = overview(ds)?;
    let (categories, _) = category_counts(ds, None)?;
    let (ui_types, _) = ui_type_counts(ds, None)?;
    Ok(DashboardSummary {
        unannotated_widgets: overview.unannotated_widgets,
        overview,
        screenshots: screenshot_statistics(ds, sd)?,
        category_distribution: nonempty(categories),
        ui_type_distribution: nonempty(ui_types),
        widgets_per_scenario: widgets_per_scenario(ds, sd)?,
    })
}
