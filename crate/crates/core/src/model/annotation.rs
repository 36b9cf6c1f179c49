use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ids::{ClusterId, WidgetId};

const APP_STORE_CATEGORIES: &str = include_str!("../../categories.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UiType {
    InputControl,
    NavigationalComponent,
    InformationalComponent,
}

impl UiType {
    pub const ALL: [UiType; 3] = [
        UiType::InputControl,
        UiType::NavigationalComponent,
        UiType::InformationalComponent,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            UiType::InputControl => "InputControl",
            UiType::NavigationalComponent => "NavigationalComponent",
            UiType::InformationalComponent => "InformationalComponent",
        }
    }
}

impl fmt::Display for UiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UiType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        UiType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown UI type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityType {
    Primary,
    Peripheral,
    Ambient,
}

impl ActivityType {
    pub const ALL: [ActivityType; 3] = [
        ActivityType::Primary,
        ActivityType::Peripheral,
        ActivityType::Ambient,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ActivityType::Primary => "Primary",
            ActivityType::Peripheral => "Peripheral",
            ActivityType::Ambient => "Ambient",
        }
    }
}

impl fmt::Display for ActivityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivityType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ActivityType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown activity type `{s}`"))
    }
}

/// The closed list of category labels an annotation may use.
///
/// The default set is the 27 App Store categories shipped in
/// `categories.txt`; other lists can be loaded with [`CategorySet::parse`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySet {
    labels: BTreeSet<String>,
}

impl CategorySet {
    pub fn app_store() -> Self {
        Self::parse(APP_STORE_CATEGORIES)
    }

    /// One label per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let labels = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect();
        Self { labels }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

impl Default for CategorySet {
    fn default() -> Self {
        Self::app_store()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("category `{0}` is not in the configured category list")]
    InvalidCategory(String),
    #[error("an annotation needs at least one UI type")]
    EmptyUiTypes,
}

impl AnnotationError {
    pub fn code(&self) -> &'static str {
        match self {
            AnnotationError::InvalidCategory(_) => "InvalidCategory",
            AnnotationError::EmptyUiTypes => "EmptyUiTypes",
        }
    }
}

/// Researcher-supplied semantics for one widget, without identity or version.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnnotationBody {
    #[serde(default)]
    pub app_name: String,
    #[serde(default)]
    pub screenshot_desc: String,
    #[serde(default)]
    pub widget_desc: String,
    #[serde(default)]
    pub functionality: String,
    #[serde(default)]
    pub excluded_parts: String,
    pub ui_types: BTreeSet<UiType>,
    pub category: String,
    #[serde(default)]
    pub cluster_id: Option<ClusterId>,
    #[serde(default)]
    pub activity_type: Option<ActivityType>,
}

impl AnnotationBody {
    pub fn validate(&self, categories: &CategorySet) -> Result<(), AnnotationError> {
        if !categories.contains(&self.category) {
            return Err(AnnotationError::InvalidCategory(self.category.clone()));
        }
        if self.ui_types.is_empty() {
            return Err(AnnotationError::EmptyUiTypes);
        }
        Ok(())
    }

    /// Free-text fields, in the order used by search and autocompletion.
    pub fn text_fields(&self) -> [(TextField, &str); 5] {
        [
            (TextField::AppName, self.app_name.as_str()),
            (TextField::ScreenshotDesc, self.screenshot_desc.as_str()),
            (TextField::WidgetDesc, self.widget_desc.as_str()),
            (TextField::Functionality, self.functionality.as_str()),
            (TextField::ExcludedParts, self.excluded_parts.as_str()),
        ]
    }

    pub fn text(&self, field: TextField) -> &str {
        match field {
            TextField::AppName => &self.app_name,
            TextField::ScreenshotDesc => &self.screenshot_desc,
            TextField::WidgetDesc => &self.widget_desc,
            TextField::Functionality => &self.functionality,
            TextField::ExcludedParts => &self.excluded_parts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub widget_id: WidgetId,
    #[serde(flatten)]
    pub body: AnnotationBody,
    pub version: u64,
}

/// Free-text annotation fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextField {
    AppName,
    ScreenshotDesc,
    WidgetDesc,
    Functionality,
    ExcludedParts,
}

impl TextField {
    pub const ALL: [TextField; 5] = [
        TextField::AppName,
        TextField::ScreenshotDesc,
        TextField::WidgetDesc,
        TextField::Functionality,
        TextField::ExcludedParts,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TextField::AppName => "app_name",
            TextField::ScreenshotDesc => "screenshot_desc",
            TextField::WidgetDesc => "widget_desc",
            TextField::Functionality => "functionality",
            TextField::ExcludedParts => "excluded_parts",
        }
    }
}

impl FromStr for TextField {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        TextField::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("`{s}` is not a text annotation field"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_list_has_27_labels() {
        let set = CategorySet::app_store();
        assert_eq!(set.len(), 27);
        for label in [
            "Productivity",
            "Food & Drink",
            "Social Networking",
            "Weather",
        ] {
            assert!(set.contains(label), "{label}");
        }
        assert!(!set.contains("NotACategory"));
    }

    #[test]
    fn validation() {
        let set = CategorySet::app_store();
        let mut body = AnnotationBody {
            ui_types: [UiType::InputControl].into(),
            category: "Music".into(),
            ..Default::default()
        };
        assert_eq!(body.validate(&set), Ok(()));
        body.category = "NotACategory".into();
        assert_eq!(
            body.validate(&set),
            Err(AnnotationError::InvalidCategory("NotACategory".into()))
        );
        body.category = "Music".into();
        body.ui_types.clear();
        assert_eq!(body.validate(&set), Err(AnnotationError::EmptyUiTypes));
    }

    #[test]
    fn annotation_json_is_flat() {
        let a = Annotation {
            widget_id: "w1".into(),
            body: AnnotationBody {
                ui_types: [UiType::InformationalComponent].into(),
                category: "News".into(),
                activity_type: Some(ActivityType::Ambient),
                ..Default::default()
            },
            version: 3,
        };
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["category"], "News");
        assert_eq!(v["activity_type"], "Ambient");
        assert_eq!(v["ui_types"][0], "InformationalComponent");
        assert_eq!(serde_json::from_value::<Annotation>(v).unwrap(), a);
    }
}
