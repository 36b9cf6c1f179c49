use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistEntry {
    pub count: u64,
    pub fraction: f64,
}

/// Label counts with their share of the total.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Distribution {
    pub total: u64,
    pub entries: BTreeMap<String, DistEntry>,
}

impl Distribution {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let entries = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(label, count)| {
                let fraction = if total == 0 {
                    0.0
                } else {
                    count as f64 / total as f64
                };
                (label, DistEntry { count, fraction })
            })
            .collect();
        Self { total, entries }
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts = BTreeMap::new();
        for l in labels {
            *counts.entry(l.into()).or_insert(0) += 1;
        }
        Self::from_counts(counts)
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, label: &str) -> u64 {
        self.entries.get(label).map_or(0, |e| e.count)
    }

    pub fn fraction(&self, label: &str) -> f64 {
        self.entries.get(label).map_or(0.0, |e| e.fraction)
    }

    /// Entries by descending count, ties by label.
    pub fn ranked(&self) -> Vec<(&str, DistEntry)> {
        let mut v: Vec<(&str, DistEntry)> =
            self.entries.iter().map(|(k, e)| (k.as_str(), *e)).collect();
        v.sort_by(|a, b| b.1.count.cmp(&a.1.count).then_with(|| a.0.cmp(b.0)));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

/// Mean, spread and range of a set of per-group counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64], sd: SdConvention) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let denom = match sd {
            SdConvention::Population => n as f64,
            SdConvention::Sample => (n as f64 - 1.0).max(1.0),
        };
        Self {
            n: n as u64,
            mean,
            sd: (ss / denom).sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn of_counts<I: IntoIterator<Item = u64>>(counts: I, sd: SdConvention) -> Self {
        let v: Vec<f64> = counts.into_iter().map(|c| c as f64).collect();
        Self::of(&v, sd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_to_one() {
        let d = Distribution::from_labels(["a", "a", "a", "b"]);
        assert_eq!(d.total, 4);
        assert_eq!(d.fraction("a"), 0.75);
        assert_eq!(d.fraction("b"), 0.25);
        assert_eq!(d.ranked()[0].0, "a");
    }

    #[test]
    fn empty_distribution() {
        let d = Distribution::from_labels(Vec::<String>::new());
        assert!(d.is_empty());
        assert!(d.entries.is_empty());
    }

    #[test]
    fn summary_conventions() {
        let s = Summary::of(&[2.0, 6.0], SdConvention::Population);
        assert_eq!((s.mean, s.min, s.max, s.sd), (4.0, 2.0, 6.0, 2.0));
        let s = Summary::of(&[2.0, 6.0], SdConvention::Sample);
        assert!((s.sd - 8f64.sqrt()).abs() < 1e-12);
        let s = Summary::of(&[4.0], SdConvention::Sample);
        assert_eq!((s.mean, s.sd), (4.0, 0.0));
    }
}
