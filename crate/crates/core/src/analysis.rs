//! Entropy profiles, order-k entropy, and compression-ratio reporting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{block_entropy, entropy_of_counts, extract_all, histogram, FeatureConfig};
use crate::transform::pack_cluster;
use crate::typed::{ClusteringPlan, TypedView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntropy {
    /// 1-based byte position.
    pub position: usize,
    /// Mean of the block entropies of the group.
    pub avg_entropy: f64,
    /// Entropy of the whole group taken as one block.
    pub whole_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    /// Zero-order entropy of all bytes, bits per byte.
    pub dataset_entropy: f64,
    pub per_group: Vec<GroupEntropy>,
}

pub fn entropy_profile(v: &TypedView<'_>, cfg: &FeatureConfig) -> Result<EntropyProfile> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let features = extract_all(v, cfg)?;
    let per_group = v
        .groups()
        .iter()
        .zip(&features)
        .map(|(g, f)| GroupEntropy {
            position: g.position,
            avg_entropy: f.avg_entropy,
            whole_entropy: entropy_of_counts(&histogram(&g.bytes), g.bytes.len() as u64),
        })
        .collect();
    Ok(EntropyProfile {
        dataset_entropy: block_entropy(v.as_bytes())?,
        per_group,
    })
}

/// Empirical order-`k` entropy in bits per symbol: the conditional entropy
/// of each byte given the `k` bytes before it, summed over every context
/// weighted by its occurrence count and divided by the sequence length.
/// Dividing by the full length rather than the number of contexts keeps
/// `H_{k+1} <= H_k` exact for every sequence. Contexts seen once contribute
/// zero, which biases short inputs low.
pub fn order_k_entropy(data: &[u8], k: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if data.len() <= k {
        return Err(Error::KTooLargeForData { k, len: data.len() });
    }
    if k == 0 {
        return block_entropy(data);
    }
    let total = if k <= 7 { packed_context_sum(data, k) } else { sliced_context_sum(data, k) };
    Ok(total / data.len() as f64)
}

/// Sum over contexts of `count * H(next | context)`, grouping runs of a
/// sorted key list. `same_ctx` and `same_next` compare neighbours.
fn grouped_sum<T>(keys: &[T], same_ctx: impl Fn(&T, &T) -> bool, same_next: impl Fn(&T, &T) -> bool) -> f64 {
    let mut sum = 0.0;
    let mut counts: Vec<u64> = Vec::with_capacity(256);
    let mut i = 0;
    while i < keys.len() {
        let mut j = i;
        counts.clear();
        while j < keys.len() && same_ctx(&keys[i], &keys[j]) {
            let mut m = j;
            while m < keys.len() && same_next(&keys[j], &keys[m]) {
                m += 1;
            }
            counts.push((m - j) as u64);
            j = m;
        }
        let n = (j - i) as u64;
        sum += n as f64 * entropy_of_counts(&counts, n);
        i = j;
    }
    sum
}

fn packed_context_sum(data: &[u8], k: usize) -> f64 {
    let mut keys: Vec<u64> = data
        .windows(k + 1)
        .map(|w| w.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64))
        .collect();
    keys.sort_unstable();
    grouped_sum(&keys, |a, b| a >> 8 == b >> 8, |a, b| a == b)
}

fn sliced_context_sum(data: &[u8], k: usize) -> f64 {
    let mut keys: Vec<&[u8]> = data.windows(k + 1).collect();
    keys.sort_unstable();
    grouped_sum(&keys, |a, b| a[..k] == b[..k], |a, b| a == b)
}

/// The dataset as the pipeline sees it after packing: for each block of
/// `block_size` bytes, the plan's streams in cluster order.
pub fn transformed_bytes(v: &TypedView<'_>, plan: &ClusteringPlan, block_size: usize) -> Vec<u8> {
    let n = v.width().bytes();
    let block_size = (block_size / n * n).max(n);
    let mut out = Vec::with_capacity(v.as_bytes().len());
    for block in v.as_bytes().chunks(block_size) {
        for cluster in plan.clusters() {
            out.extend(pack_cluster(block, n, cluster, plan.packing()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub original_size: u64,
    pub compressed_size: u64,
    pub cr: f64,
    pub baseline_cr: Option<f64>,
    pub cri: Option<f64>,
    /// Compression throughput in bytes per second, when timed.
    pub ct: Option<f64>,
    /// Decompression throughput in bytes per second, when timed.
    pub dt: Option<f64>,
}

/// Ratio report for `original` bytes compressed to `compressed`, with CRI
/// against `baseline` compressed bytes when given.
pub fn report(original: u64, compressed: u64, baseline: Option<u64>) -> RatioReport {
    let cr = ratio(original, compressed);
    let baseline_cr = baseline.map(|b| ratio(original, b));
    RatioReport {
        original_size: original,
        compressed_size: compressed,
        cr,
        baseline_cr,
        cri: baseline_cr.map(|b| cr / b),
        ct: None,
        dt: None,
    }
}

fn ratio(original: u64, compressed: u64) -> f64 {
    if compressed == 0 {
        // Only an empty input can compress to nothing.
        1.0
    } else {
        original as f64 / compressed as f64
    }
}

impl RatioReport {
    pub fn with_timing(mut self, compress_secs: f64, decompress_secs: f64) -> Self {
        let bytes = self.original_size as f64;
        self.ct = (compress_secs > 0.0).then(|| bytes / compress_secs);
        self.dt = (decompress_secs > 0.0).then(|| bytes / decompress_secs);
        self
    }
}

/// Geometric mean of positive values; `None` for an empty slice.
pub fn geometric_mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some((xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp())
}

/// One line of `tdt bench` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub schema: String,
    pub dataset: String,
    pub width: usize,
    pub codec: String,
    pub mode: String,
    pub plan: String,
    pub block_size: usize,
    pub workers: usize,
    #[serde(flatten)]
    pub report: RatioReport,
}

pub const BENCH_SCHEMA: &str = "tdt-bench/1";

/// `tdt analyze` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub schema: String,
    pub dataset: String,
    pub width: usize,
    pub size: u64,
    pub profile: EntropyProfile,
    /// `(k, H_k)` pairs.
    pub order_k: Vec<(usize, f64)>,
}

pub const ANALYSIS_SCHEMA: &str = "tdt-analysis/1";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typed::{view, FloatWidth};

    #[test]
    fn order_zero_is_block_entropy() {
        let data = b"mississippi river";
        assert_eq!(order_k_entropy(data, 0).unwrap(), block_entropy(data).unwrap());
    }

    #[test]
    fn periodic_sequence_is_determined() {
        let data: Vec<u8> = b"ab".iter().copied().cycle().take(1000).collect();
        assert_eq!(order_k_entropy(&data, 1).unwrap(), 0.0);
        assert_eq!(order_k_entropy(&data, 9).unwrap(), 0.0);
        assert!((order_k_entropy(&data, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn short_sequence_counterexample_stays_ordered() {
        // "aab": contexts 'a' -> {a, b}; normalised by the full length.
        let h1 = order_k_entropy(b"aab", 1).unwrap();
        assert!((h1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(h1 <= order_k_entropy(b"aab", 0).unwrap());
    }

    #[test]
    fn packed_and_sliced_paths_agree() {
        let mut x = 7u32;
        let data: Vec<u8> = (0..5000)
            .map(|_| {
                x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
                ((x >> 16) % 5) as u8
            })
            .collect();
        for k in 1..=7 {
            let a = packed_context_sum(&data, k);
            let b = sliced_context_sum(&data, k);
            assert!((a - b).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn bad_orders() {
        assert!(matches!(order_k_entropy(&[], 0), Err(Error::EmptyInput)));
        assert!(matches!(order_k_entropy(&[1, 2], 2), Err(Error::KTooLargeForData { k: 2, len: 2 })));
    }

    #[test]
    fn profile_of_constant_positions() {
        let data: Vec<u8> = (0..4096u32).flat_map(|i| [(i * 7) as u8, ((i * 13) >> 3) as u8, 0x41, 0xC0]).collect();
        let p = entropy_profile(&view(&data, FloatWidth::SINGLE).unwrap(), &FeatureConfig::default()).unwrap();
        assert_eq!(p.per_group.len(), 4);
        assert_eq!(p.per_group[2].avg_entropy, 0.0);
        assert_eq!(p.per_group[3].whole_entropy, 0.0);
        assert!(p.dataset_entropy > 0.0);
        let constant = [0x11u8, 0x22, 0x33, 0x44].repeat(100);
        let p = entropy_profile(&view(&constant, FloatWidth::SINGLE).unwrap(), &FeatureConfig::default()).unwrap();
        assert!(p.per_group.iter().all(|g| g.avg_entropy == 0.0));
        assert!(entropy_profile(&view(&[], FloatWidth::SINGLE).unwrap(), &FeatureConfig::default()).is_err());
    }

    #[test]
    fn ratio_reports() {
        let r = report(1000, 500, None);
        assert_eq!(r.cr, 2.0);
        assert_eq!(r.cri, None);
        let r = report(17_100, 10_000, Some(11_875));
        assert!((r.cr - 1.71).abs() < 1e-12);
        assert!((r.baseline_cr.unwrap() - 1.44).abs() < 1e-12);
        assert!((r.cri.unwrap() - 1.1875).abs() < 1e-12);
        let r = report(800, 800, Some(800));
        assert_eq!((r.cr, r.cri), (1.0, Some(1.0)));
        let t = report(1000, 10, None).with_timing(0.5, 0.0);
        assert_eq!((t.ct, t.dt), (Some(2000.0), None));
    }

    #[test]
    fn bench_record_json_shape() {
        let rec = BenchRecord {
            schema: BENCH_SCHEMA.into(),
            dataset: "a.f32".into(),
            width: 4,
            codec: "lz77".into(),
            mode: "dynamic".into(),
            plan: "{1,2}|{3}|{4}".into(),
            block_size: 262_144,
            workers: 1,
            report: report(1000, 500, Some(800)),
        };
        let json = serde_json::to_value(&rec).unwrap();
        assert_eq!(json["cr"], 2.0);
        assert_eq!(json["schema"], "tdt-bench/1");
        assert!(json.get("report").is_none());
        let back: BenchRecord = serde_json::from_value(json).unwrap();
        assert_eq!(back, rec);
    }
}
