//! Statistical signatures of byte groups: block-entropy summary statistics
//! plus the normalized byte histogram, 260 coordinates in all.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::typed::TypedView;

pub const FEATURE_DIM: usize = 4 + 256;
pub const DEFAULT_ENTROPY_BLOCK_SIZE: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    EntropyOnly,
    FrequencyOnly,
    #[default]
    Combined,
}

impl FeatureSet {
    pub fn dim(self) -> usize {
        match self {
            FeatureSet::EntropyOnly => 4,
            FeatureSet::FrequencyOnly => 256,
            FeatureSet::Combined => FEATURE_DIM,
        }
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy_only" | "entropy" => Ok(FeatureSet::EntropyOnly),
            "frequency_only" | "frequency" => Ok(FeatureSet::FrequencyOnly),
            "combined" | "all" => Ok(FeatureSet::Combined),
            _ => Err(Error::InvalidConfig(format!("unknown feature set {s:?}"))),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::EntropyOnly => "entropy_only",
            FeatureSet::FrequencyOnly => "frequency_only",
            FeatureSet::Combined => "combined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Window, in bytes of the group, over which each block entropy is taken.
    pub entropy_block_size: usize,
    pub feature_set: FeatureSet,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            entropy_block_size: DEFAULT_ENTROPY_BLOCK_SIZE,
            feature_set: FeatureSet::Combined,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.entropy_block_size == 0 {
            return Err(Error::InvalidConfig("entropy_block_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub avg_entropy: f64,
    pub std_entropy: f64,
    pub max_entropy: f64,
    pub min_entropy: f64,
    pub byte_freq: [f64; 256],
}

impl FeatureVector {
    /// Full 260-dimensional layout: the four entropy statistics, then
    /// `byte_freq[0..256]`.
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[0] = self.avg_entropy;
        out[1] = self.std_entropy;
        out[2] = self.max_entropy;
        out[3] = self.min_entropy;
        out[4..].copy_from_slice(&self.byte_freq);
        out
    }

    /// The coordinates selected by `set`.
    pub fn coords(&self, set: FeatureSet) -> Vec<f64> {
        let all = self.to_array();
        match set {
            FeatureSet::EntropyOnly => all[..4].to_vec(),
            FeatureSet::FrequencyOnly => all[4..].to_vec(),
            FeatureSet::Combined => all.to_vec(),
        }
    }
}

pub(crate) fn histogram(bytes: &[u8]) -> [u64; 256] {
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    counts
}

/// Shannon entropy in bits of a histogram with `total` samples.
pub(crate) fn entropy_of_counts(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Zero-order entropy of `bytes` in bits per byte, over the 256-symbol
/// alphabet.
pub fn block_entropy(bytes: &[u8]) -> Result<f64> {
    if bytes.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(entropy_of_counts(&histogram(bytes), bytes.len() as u64))
}

/// Computes the feature vector of one byte group. The group is cut into
/// `entropy_block_size` windows; a trailing short window counts as a block.
pub fn feature_extraction(group: &[u8], cfg: &FeatureConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    if group.is_empty() {
        return Err(Error::EmptyInput);
    }
    let entropies: Vec<f64> = group
        .chunks(cfg.entropy_block_size)
        .map(|c| entropy_of_counts(&histogram(c), c.len() as u64))
        .collect();
    let n = entropies.len() as f64;
    let avg = entropies.iter().sum::<f64>() / n;
    let std = if entropies.len() > 1 {
        let ss: f64 = entropies.iter().map(|h| (h - avg) * (h - avg)).sum();
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let max = entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = entropies.iter().copied().fold(f64::INFINITY, f64::min);

    let counts = histogram(group);
    let total = group.len() as f64;
    let mut byte_freq = [0.0; 256];
    for (f, &c) in byte_freq.iter_mut().zip(counts.iter()) {
        *f = c as f64 / total;
    }
    Ok(FeatureVector {
        // Rounding in the mean can push it a hair outside [min, max].
        avg_entropy: avg.clamp(min, max),
        std_entropy: std,
        max_entropy: max,
        min_entropy: min,
        byte_freq,
    })
}

/// Feature vectors for every byte position of `v`, in position order.
pub fn extract_all(v: &TypedView<'_>, cfg: &FeatureConfig) -> Result<Vec<FeatureVector>> {
    let groups = v.groups();
    par::map(&groups, |g| feature_extraction(&g.bytes, cfg))
        .into_iter()
        .collect()
}

/// Euclidean distance over the coordinates chosen by `set`.
pub fn feature_distance(a: &FeatureVector, b: &FeatureVector, set: FeatureSet) -> f64 {
    let (xa, xb) = (a.to_array(), b.to_array());
    let range = match set {
        FeatureSet::EntropyOnly => 0..4,
        FeatureSet::FrequencyOnly => 4..FEATURE_DIM,
        FeatureSet::Combined => 0..FEATURE_DIM,
    };
    xa[range.clone()]
        .iter()
        .zip(&xb[range])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
