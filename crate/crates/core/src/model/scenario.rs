use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioKeyError {
    #[error("scenario field `{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("expected `participant/environment/task`, got `{0}`")]
    Malformed(String),
}

/// One layout context: participant × environment × task.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenarioKey")]
pub struct ScenarioKey {
    participant_id: String,
    environment: String,
    task: String,
}

#[derive(Deserialize)]
struct RawScenarioKey {
    participant_id: String,
    environment: String,
    task: String,
}

impl TryFrom<RawScenarioKey> for ScenarioKey {
    type Error = ScenarioKeyError;

    fn try_from(raw: RawScenarioKey) -> Result<Self, Self::Error> {
        ScenarioKey::new(raw.participant_id, raw.environment, raw.task)
    }
}

impl ScenarioKey {
    pub fn new(
        participant_id: impl Into<String>,
        environment: impl Into<String>,
        task: impl Into<String>,
    ) -> Result<Self, ScenarioKeyError> {
        let key = Self {
            participant_id: participant_id.into(),
            environment: environment.into(),
            task: task.into(),
        };
        for (name, value) in [
            ("participant_id", &key.participant_id),
            ("environment", &key.environment),
            ("task", &key.task),
        ] {
            if value.is_empty() {
                return Err(ScenarioKeyError::EmptyField(name));
            }
        }
        Ok(key)
    }

    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn environment(&self) -> &str {
        &self.environment
    }

    pub fn task(&self) -> &str {
        &self.task
    }
}

impl fmt::Display for ScenarioKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            self.participant_id, self.environment, self.task
        )
    }
}

/// Parses the `participant/environment/task` form used on the command line.
impl FromStr for ScenarioKey {
    type Err = ScenarioKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('/').collect();
        match parts.as_slice() {
            [p, e, t] => ScenarioKey::new(*p, *e, *t),
            _ => Err(ScenarioKeyError::Malformed(s.to_owned())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_fields() {
        assert_eq!(
            ScenarioKey::new("p1", "", "work"),
            Err(ScenarioKeyError::EmptyField("environment"))
        );
        let err = serde_json::from_str::<ScenarioKey>(
            r#"{"participant_id":"","environment":"office","task":"work"}"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn parses_slash_form() {
        let k: ScenarioKey = "P07/living room/relaxing".parse().unwrap();
        assert_eq!(k.environment(), "living room");
        assert_eq!(k.to_string(), "P07/living room/relaxing");
        assert!("a/b".parse::<ScenarioKey>().is_err());
    }

    #[test]
    fn equality_is_exact() {
        let a = ScenarioKey::new("p", "office", "work").unwrap();
        let b = ScenarioKey::new("p", "Office", "work").unwrap();
        assert_ne!(a, b);
    }
}
