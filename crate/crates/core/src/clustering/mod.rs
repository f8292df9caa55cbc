//! Byte-group clustering: single-linkage dendrogram, one candidate partition
//! per cluster count, internal-validation scoring and argmax selection.
//!
//! Cutting a single-linkage dendrogram at `k` clusters yields a partition that
//! maximizes the smallest distance between any two clusters, so every
//! candidate is optimal for its `k` under that objective; the score only picks
//! the cluster count.

pub mod exhaustive;
pub mod linkage;
pub mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use exhaustive::{exhaustive_best_clustering, set_partitions, ExhaustiveResult};
pub use linkage::{cut, distance_matrix, linkage, linkage_from_distances, LinkageMatrix, MergeStep};

use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureVector};
use crate::par;
use crate::typed::{ClusteringPlan, FloatWidth, Packing, Partition};

pub const DEFAULT_GAP_DRAWS: usize = 10;
pub const DEFAULT_GAP_SEED: u64 = 0x7D7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Silhouette,
    DaviesBouldin,
    CalinskiHarabasz,
    GapStatistic,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Silhouette,
        MetricKind::DaviesBouldin,
        MetricKind::CalinskiHarabasz,
        MetricKind::GapStatistic,
    ];
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "silhouette" => Ok(MetricKind::Silhouette),
            "davies_bouldin" | "db" => Ok(MetricKind::DaviesBouldin),
            "calinski_harabasz" | "ch" => Ok(MetricKind::CalinskiHarabasz),
            "gap_statistic" | "gap" => Ok(MetricKind::GapStatistic),
            _ => Err(Error::InvalidConfig(format!("unknown metric {s:?}"))),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Silhouette => "silhouette",
            MetricKind::DaviesBouldin => "davies_bouldin",
            MetricKind::CalinskiHarabasz => "calinski_harabasz",
            MetricKind::GapStatistic => "gap_statistic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreMetric {
    pub kind: MetricKind,
    pub gap_reference_draws: usize,
    pub rng_seed: u64,
}

impl ScoreMetric {
    pub fn new(kind: MetricKind) -> Self {
        ScoreMetric {
            kind,
            gap_reference_draws: DEFAULT_GAP_DRAWS,
            rng_seed: DEFAULT_GAP_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == MetricKind::GapStatistic && self.gap_reference_draws == 0 {
            return Err(Error::InvalidConfig("gap statistic needs at least one reference draw".into()));
        }
        Ok(())
    }
}

/// Feature set and metric tuned per word width: frequency features with
/// Davies-Bouldin for 4-byte words, all features with the gap statistic for
/// 8-byte words. Half precision never reaches the scorer.
pub fn default_pairing(width: FloatWidth) -> (FeatureSet, ScoreMetric) {
    match width.bytes() {
        8 => (FeatureSet::Combined, ScoreMetric::new(MetricKind::GapStatistic)),
        _ => (FeatureSet::FrequencyOnly, ScoreMetric::new(MetricKind::DaviesBouldin)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredClustering {
    pub partition: Partition,
    pub k: usize,
    pub score: f64,
}

/// Scores `partition` of the byte groups `xs`; larger is better.
pub fn score(partition: &Partition, xs: &[FeatureVector], set: FeatureSet, metric: &ScoreMetric) -> f64 {
    let points: Vec<Vec<f64>> = xs.iter().map(|x| x.coords(set)).collect();
    score_points(&points, &partition.labels(), metric)
}

pub(crate) fn score_points(points: &[Vec<f64>], labels: &[usize], metric: &ScoreMetric) -> f64 {
    match metric.kind {
        MetricKind::Silhouette => metrics::silhouette(points, labels),
        MetricKind::DaviesBouldin => metrics::davies_bouldin(points, labels),
        MetricKind::CalinskiHarabasz => metrics::calinski_harabasz(points, labels),
        MetricKind::GapStatistic => {
            metrics::gap_statistic(points, labels, metric.gap_reference_draws, metric.rng_seed)
        }
    }
}

/// Every dendrogram cut `k = 1..=n` with its score, in increasing `k`.
pub fn score_candidates(
    xs: &[FeatureVector],
    set: FeatureSet,
    metric: &ScoreMetric,
) -> Result<Vec<ScoredClustering>> {
    metric.validate()?;
    let l = linkage(xs, set)?;
    let points: Vec<Vec<f64>> = xs.iter().map(|x| x.coords(set)).collect();
    let ks: Vec<usize> = (1..=xs.len()).collect();
    par::map(&ks, |&k| {
        let partition = cut(&l, k)?;
        let score = score_points(&points, &partition.labels(), metric);
        Ok(ScoredClustering { partition, k, score })
    })
    .into_iter()
    .collect()
}

/// Index of the best candidate; ties go to the smaller `k`.
pub fn argmax(candidates: &[ScoredClustering]) -> usize {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.score > candidates[best].score {
            best = i;
        }
    }
    best
}

/// Picks the clustering of byte positions for features `xs` (one per byte
/// position). Two-byte words always split into two singletons.
pub fn select_clustering(xs: &[FeatureVector], set: FeatureSet, metric: &ScoreMetric) -> Result<ClusteringPlan> {
    if xs.len() < 2 {
        return Err(Error::TooFewGroups(xs.len()));
    }
    let width = FloatWidth::new(xs.len())?;
    if width == FloatWidth::HALF {
        return Ok(ClusteringPlan::singletons(width));
    }
    let mut candidates = score_candidates(xs, set, metric)?;
    let best = candidates.swap_remove(argmax(&candidates));
    ClusteringPlan::new(width, best.partition, Packing::SameByte)
}
