//! Brute-force reference: try every set partition of the byte positions.

use crate::codecs::CodecRegistry;
use crate::error::Result;
use crate::pipeline::{compress_pipeline_with, PipelineConfig};
use crate::typed::{ClusteringPlan, Partition, TypedView};

/// All set partitions of `{1..n}`, enumerated by restricted growth strings
/// in lexicographic order. There are Bell(n) of them.
pub fn set_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut labels = vec![0usize; n];
    loop {
        out.push(Partition::from_labels(&labels).expect("restricted growth string"));
        // Increment the rightmost position that may grow.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let max_prefix = labels[..i].iter().copied().max().unwrap_or(0);
            if labels[i] <= max_prefix {
                labels[i] += 1;
                labels[i + 1..].fill(0);
                break;
            }
            i -= 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub plan: ClusteringPlan,
    /// Original bytes divided by container bytes.
    pub cr: f64,
    pub compressed_size: usize,
    /// Container size for every partition, in enumeration order.
    pub sizes: Vec<(String, usize)>,
}

/// Compresses `v` under every set partition of its byte positions with
/// `cfg` and returns the smallest result. Ties keep the earlier partition.
pub fn exhaustive_best_clustering(
    v: &TypedView<'_>,
    registry: &CodecRegistry,
    cfg: &PipelineConfig,
) -> Result<ExhaustiveResult> {
    let width = v.width();
    let plans: Vec<ClusteringPlan> = set_partitions(width.bytes())
        .into_iter()
        .map(|p| ClusteringPlan::new(width, p, cfg.packing))
        .collect::<Result<_>>()?;
    // Each run is already parallel over blocks.
    let sizes: Vec<usize> = plans
        .iter()
        .map(|plan| compress_pipeline_with(registry, v, cfg, plan).map(|c| c.total_len()))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &s) in sizes.iter().enumerate() {
        if s < sizes[best] {
            best = i;
        }
    }
    Ok(ExhaustiveResult {
        plan: plans[best].clone(),
        cr: v.as_bytes().len() as f64 / sizes[best] as f64,
        compressed_size: sizes[best],
        sizes: plans.iter().map(|p| p.to_string()).zip(sizes).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs::CodecId;
    use crate::typed::{view, FloatWidth};
    use std::collections::HashSet;

    #[test]
    fn bell_numbers() {
        let bell = [1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in (1..=8).zip(&bell) {
            let parts = set_partitions(n);
            assert_eq!(parts.len(), b, "n={n}");
            let unique: HashSet<String> = parts.iter().map(|p| p.to_string()).collect();
            assert_eq!(unique.len(), b);
        }
        assert_eq!(set_partitions(2).iter().map(|p| p.to_string()).collect::<Vec<_>>(), ["{1,2}", "{1}|{2}"]);
    }

    #[test]
    fn constant_high_bytes_are_split_off() {
        // Positions 1 and 2 hold pseudo-random bytes, 3 and 4 are constant.
        let mut x = 0x1234_5678u32;
        let data: Vec<u8> = (0..20_000)
            .flat_map(|_| {
                x ^= x << 13;
                x ^= x >> 17;
                x ^= x << 5;
                [x as u8, (x >> 8) as u8, 0x3F, 0x80]
            })
            .collect();
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        let cfg = PipelineConfig {
            codec: CodecId::HUFFMAN,
            worker_count: 1,
            ..Default::default()
        };
        let r = exhaustive_best_clustering(&v, CodecRegistry::builtin(), &cfg).unwrap();
        assert_eq!(r.sizes.len(), 15);
        let labels = r.plan.partition().labels();
        assert_ne!(labels[0], labels[2]);
        assert_ne!(labels[0], labels[3]);
        assert_ne!(labels[1], labels[2]);
        let single = r.sizes[0].1;
        assert_eq!(r.sizes[0].0, "{1,2,3,4}");
        assert!(r.compressed_size < single);
        assert!(r.cr > data.len() as f64 / single as f64);
    }
}
