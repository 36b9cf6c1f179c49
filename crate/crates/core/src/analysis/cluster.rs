use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::model::{ActivityType, Cluster, ClusterId, Layout, ScenarioKey, WidgetId};

use super::distribution::{Distribution, SdConvention, Summary};
use super::AnalysisError;

/// Default proximity threshold for computed clusters, in meters.
pub const DEFAULT_CLUSTER_THRESHOLD_M: f64 = 0.75;

/// Where cluster membership comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "source", content = "threshold_m")]
pub enum ClusterSource {
    /// `cluster_id` annotations. An annotated placement without a cluster id
    /// counts as a cluster of one.
    Annotated,
    /// Single-linkage components at the given distance threshold.
    Computed(f64),
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Partitions a layout into single-linkage components: two widgets share a
/// cluster iff a chain of pairwise distances `<= threshold_m` joins them.
///
/// Clusters are ordered by their lowest widget id and named `c1`, `c2`, ...
pub fn cluster_layout(layout: &Layout, threshold_m: f64) -> Result<Vec<Cluster>, AnalysisError> {
    if threshold_m.is_nan() || threshold_m <= 0.0 {
        return Err(AnalysisError::InvalidThreshold(threshold_m));
    }
    let items: Vec<(&WidgetId, [f64; 3])> = layout
        .placements
        .iter()
        .map(|(id, pose)| (id, pose.position))
        .collect();
    let mut sets = DisjointSet::new(items.len());
    let limit = threshold_m * threshold_m;
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            let (a, b) = (items[i].1, items[j].1);
            let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
            if d2 <= limit {
                sets.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<WidgetId>> = BTreeMap::new();
    for (i, (id, _)) in items.iter().enumerate() {
        groups
            .entry(sets.find(i))
            .or_default()
            .insert((*id).clone());
    }
    let mut members: Vec<BTreeSet<WidgetId>> = groups.into_values().collect();
    members.sort_by(|a, b| a.first().cmp(&b.first()));
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(i, widget_ids)| Cluster {
            id: ClusterId::new(format!("c{}", i + 1)),
            scenario: layout.scenario.clone(),
            widget_ids,
            activity_type: None,
        })
        .collect())
}

/// Most common activity among members; ties go to the earlier variant.
fn majority_activity(ds: &Dataset, members: &BTreeSet<WidgetId>) -> Option<ActivityType> {
    let mut votes: BTreeMap<ActivityType, usize> = BTreeMap::new();
    for w in members {
        if let Some(a) = ds.annotations.get(w).and_then(|a| a.body.activity_type) {
            *votes.entry(a).or_default() += 1;
        }
    }
    let best = votes.values().copied().max()?;
    votes.into_iter().find(|(_, n)| *n == best).map(|(a, _)| a)
}

/// Clusters of every scenario's final layout under `source`.
pub fn clusters(ds: &Dataset, source: ClusterSource) -> Result<Vec<Cluster>, AnalysisError> {
    let layouts = ds.layouts()?;
    let mut out = Vec::new();
    match source {
        ClusterSource::Computed(threshold) => {
            for layout in &layouts {
                for mut c in cluster_layout(layout, threshold)? {
                    c.activity_type = majority_activity(ds, &c.widget_ids);
                    out.push(c);
                }
            }
        }
        ClusterSource::Annotated => {
            let mut missing = Vec::new();
            for layout in &layouts {
                let mut named: BTreeMap<ClusterId, BTreeSet<WidgetId>> = BTreeMap::new();
                let mut solo = Vec::new();
                for w in layout.placements.keys() {
                    match ds.annotations.get(w) {
                        None => missing.push(w.clone()),
                        Some(a) => match &a.body.cluster_id {
                            Some(c) => {
                                named.entry(c.clone()).or_default().insert(w.clone());
                            }
                            None => solo.push(w.clone()),
                        },
                    }
                }
                for (id, widget_ids) in named {
                    out.push(Cluster {
                        activity_type: majority_activity(ds, &widget_ids),
                        id,
                        scenario: layout.scenario.clone(),
                        widget_ids,
                    });
                }
                for w in solo {
                    let widget_ids: BTreeSet<WidgetId> = [w.clone()].into();
                    out.push(Cluster {
                        activity_type: majority_activity(ds, &widget_ids),
                        id: ClusterId::new(format!("solo:{w}")),
                        scenario: layout.scenario.clone(),
                        widget_ids,
                    });
                }
            }
            if !missing.is_empty() {
                missing.sort();
                missing.dedup();
                return Err(AnalysisError::UnannotatedWidget(missing));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub total_clusters: u64,
    pub clusters_per_participant: Summary,
    pub clusters_per_scenario: Summary,
    pub widgets_per_cluster: Summary,
    /// Cluster size → number of clusters of that size.
    pub size_histogram: BTreeMap<usize, u64>,
    /// Share of placed widgets whose cluster has exactly one member.
    pub fraction_singleton: f64,
    /// Share of placed widgets in clusters of two.
    pub fraction_pairs: f64,
    /// Share of placed widgets in clusters of three or more.
    pub fraction_3plus: f64,
    /// Share of placed widgets in clusters of more than five.
    pub fraction_gt5: f64,
}

pub fn cluster_statistics(
    ds: &Dataset,
    source: ClusterSource,
    sd: SdConvention,
) -> Result<ClusterStats, AnalysisError> {
    let clusters = clusters(ds, source)?;
    cluster_statistics_of(&clusters, sd)
}

/// Statistics over an explicit clustering.
pub fn cluster_statistics_of(
    clusters: &[Cluster],
    sd: SdConvention,
) -> Result<ClusterStats, AnalysisError> {
    if clusters.is_empty() {
        return Err(AnalysisError::NoClusters);
    }
    let mut per_participant: BTreeMap<&str, u64> = BTreeMap::new();
    let mut per_scenario: BTreeMap<&ScenarioKey, u64> = BTreeMap::new();
    let mut histogram: BTreeMap<usize, u64> = BTreeMap::new();
    for c in clusters {
        *per_participant
            .entry(c.scenario.participant_id())
            .or_default() += 1;
        *per_scenario.entry(&c.scenario).or_default() += 1;
        *histogram.entry(c.widget_ids.len()).or_default() += 1;
    }
    let sizes: Vec<u64> = clusters.iter().map(|c| c.widget_ids.len() as u64).collect();
    let widgets: u64 = sizes.iter().sum();
    let share = |pred: &dyn Fn(u64) -> bool| {
        sizes.iter().filter(|s| pred(**s)).sum::<u64>() as f64 / widgets as f64
    };
    Ok(ClusterStats {
        total_clusters: clusters.len() as u64,
        clusters_per_participant: Summary::of_counts(per_participant.values().copied(), sd),
        clusters_per_scenario: Summary::of_counts(per_scenario.values().copied(), sd),
        widgets_per_cluster: Summary::of_counts(sizes.iter().copied(), sd),
        size_histogram: histogram,
        fraction_singleton: share(&|s| s == 1),
        fraction_pairs: share(&|s| s == 2),
        fraction_3plus: share(&|s| s >= 3),
        fraction_gt5: share(&|s| s > 5),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityBreakdown {
    /// Share of annotated clusters per activity type.
    pub overall: Distribution,
    /// The same split for each cluster size.
    pub by_cluster_size: BTreeMap<usize, Distribution>,
}

pub fn activity_breakdown(ds: &Dataset) -> Result<ActivityBreakdown, AnalysisError> {
    let clusters = clusters(ds, ClusterSource::Annotated)?;
    activity_breakdown_of(&clusters)
}

pub fn activity_breakdown_of(clusters: &[Cluster]) -> Result<ActivityBreakdown, AnalysisError> {
    let missing: Vec<String> = clusters
        .iter()
        .filter(|c| c.activity_type.is_none())
        .map(|c| format!("{}#{}", c.scenario, c.id))
        .collect();
    if !missing.is_empty() {
        return Err(AnalysisError::MissingActivityType(missing));
    }
    let label = |c: &Cluster| c.activity_type.expect("checked above").as_str();
    let overall = Distribution::from_labels(clusters.iter().map(label));
    let mut by_size: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for c in clusters {
        by_size
            .entry(c.widget_ids.len())
            .or_default()
            .push(label(c));
    }
    Ok(ActivityBreakdown {
        overall,
        by_cluster_size: by_size
            .into_iter()
            .map(|(size, labels)| (size, Distribution::from_labels(labels)))
            .collect(),
    })
}
