//! Invariants checked over generated inputs.

use proptest::prelude::*;

use tdt_core::analysis::order_k_entropy;
use tdt_core::clustering::{cut, linkage_from_distances};
use tdt_core::codecs::{compress, decompress, CodecId, CodecParams};
use tdt_core::features::block_entropy;
use tdt_core::pipeline::{compress_bytes, decompress_bytes};
use tdt_core::transform::{pack, unpack};
use tdt_core::typed::view;
use tdt_core::{ClusteringPlan, CodecRegistry, Container, FloatWidth, Packing, Partition, PipelineConfig};

fn width() -> impl Strategy<Value = FloatWidth> {
    prop_oneof![Just(FloatWidth::HALF), Just(FloatWidth::SINGLE), Just(FloatWidth::DOUBLE)]
}

fn packing() -> impl Strategy<Value = Packing> {
    prop_oneof![Just(Packing::SameByte), Just(Packing::SameValue)]
}

/// A width, a plan for it and whole words of data.
fn planned_data() -> impl Strategy<Value = (ClusteringPlan, Vec<u8>)> {
    (width(), packing()).prop_flat_map(|(w, p)| {
        let n = w.bytes();
        (
            prop::collection::vec(0..n, n),
            prop::collection::vec(any::<u8>(), 0..200).prop_map(move |mut d| {
                d.truncate(d.len() / n * n);
                d
            }),
        )
            .prop_map(move |(labels, data)| {
                let plan = ClusteringPlan::new(w, Partition::from_labels(&labels).unwrap(), p).unwrap();
                (plan, data)
            })
    })
}

/// Bytes drawn from a small alphabet so codecs find structure.
fn skewed_bytes(max: usize) -> impl Strategy<Value = Vec<u8>> {
    (1u8..=255).prop_flat_map(move |top| prop::collection::vec(0..=top, 0..max))
}

proptest! {
    #[test]
    fn pack_then_unpack_is_identity((plan, data) in planned_data()) {
        let v = view(&data, plan.width()).unwrap();
        let packed = pack(&v, &plan).unwrap();
        prop_assert_eq!(packed.total_len(), data.len());
        prop_assert_eq!(unpack(&packed).unwrap().into_bytes(), data);
    }

    #[test]
    fn labels_survive_relabeling(labels in prop::collection::vec(0usize..8, 2..9), shift in 1usize..8) {
        let p = Partition::from_labels(&labels).unwrap();
        let renamed: Vec<usize> = labels.iter().map(|l| (l + shift) % 8).collect();
        prop_assert_eq!(&Partition::from_labels(&renamed).unwrap(), &p);
        let text = p.to_string();
        prop_assert_eq!(&text.parse::<Partition>().unwrap(), &p);
        prop_assert_eq!(Partition::from_labels(&p.labels()).unwrap(), p);
    }

    #[test]
    fn plan_encoding_round_trips((plan, _) in planned_data()) {
        let bytes = plan.encode();
        prop_assert_eq!(bytes.len(), 1 + plan.width().bytes());
        prop_assert_eq!(ClusteringPlan::decode(plan.width(), plan.packing(), &bytes).unwrap(), plan);
    }

    #[test]
    fn store_lz77_huffman_round_trip(data in skewed_bytes(3000), min_match in 3usize..8, lazy: bool) {
        let params = CodecParams { lz77_min_match: min_match, lz77_lazy: lazy, lz77_window: 1024, ..Default::default() };
        for codec in [CodecId::STORE, CodecId::LZ77, CodecId::HUFFMAN] {
            let c = compress(codec, &params, &data).unwrap();
            prop_assert_eq!(c[0] as u16, codec.0);
            prop_assert_eq!(decompress(codec, &c).unwrap(), data.clone());
        }
    }

    #[test]
    fn xor_delta_round_trip(w in width(), words in prop::collection::vec(any::<u64>(), 0..300), smooth: bool) {
        let n = w.bytes();
        let mut data = Vec::new();
        let mut acc = 0u64;
        for x in words {
            // Either arbitrary words or a slowly drifting counter.
            acc = if smooth { acc.wrapping_add(x % 5) } else { x };
            data.extend_from_slice(&acc.to_le_bytes()[..n]);
        }
        let params = CodecParams { xor_word_width: w, ..Default::default() };
        let c = compress(CodecId::XOR_DELTA, &params, &data).unwrap();
        prop_assert_eq!(decompress(CodecId::XOR_DELTA, &c).unwrap(), data);
    }

    #[test]
    fn decoders_reject_or_survive_garbage(codec in 1u16..=4, body in prop::collection::vec(any::<u8>(), 0..64)) {
        let mut stream = vec![codec as u8];
        stream.extend(body);
        // Any outcome but a panic is acceptable.
        let _ = decompress(CodecId(codec), &stream);
    }

    #[test]
    fn order_k_entropy_never_increases(data in skewed_bytes(2000).prop_filter("long enough", |d| d.len() > 8)) {
        let mut prev = order_k_entropy(&data, 0).unwrap();
        prop_assert!((prev - block_entropy(&data).unwrap()).abs() < 1e-12);
        for k in 1..8 {
            let h = order_k_entropy(&data, k).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= prev + 1e-9, "k={} {} > {}", k, h, prev);
            prev = h;
        }
    }

    #[test]
    fn cuts_refine_each_other(points in prop::collection::vec(0u8..20, 2..9)) {
        let n = points.len();
        let d: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (points[i] as f64 - points[j] as f64).abs()).collect())
            .collect();
        let l = linkage_from_distances(&d).unwrap();
        prop_assert_eq!(l.merge_steps.len(), n - 1);
        let mut coarser = cut(&l, 1).unwrap();
        prop_assert_eq!(coarser.k(), 1);
        for k in 2..=n {
            let finer = cut(&l, k).unwrap();
            prop_assert_eq!(finer.k(), k);
            // Every finer cluster sits inside one coarser cluster.
            let outer = coarser.labels();
            for c in finer.clusters() {
                prop_assert!(c.iter().all(|&p| outer[p - 1] == outer[c[0] - 1]));
            }
            coarser = finer;
        }
    }

    #[test]
    fn container_round_trips_and_truncation_is_an_error(
        (plan, mut data) in planned_data(),
        codec in prop_oneof![Just(CodecId::LZ77), Just(CodecId::HUFFMAN), Just(CodecId::XOR_DELTA)],
        words_per_block in 1usize..20,
        tail in prop::collection::vec(any::<u8>(), 0..8),
        workers in 1usize..4,
    ) {
        let w = plan.width();
        data.extend(tail.into_iter().take(w.bytes() - 1));
        let cfg = PipelineConfig {
            codec,
            block_size: words_per_block * w.bytes(),
            packing: plan.packing(),
            worker_count: workers,
            ..Default::default()
        };
        let c = compress_bytes(CodecRegistry::builtin(), &data, w, &cfg, &plan).unwrap();
        let bytes = c.to_bytes();
        prop_assert_eq!(bytes.len(), c.total_len());
        let parsed = Container::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&parsed, &c);
        prop_assert_eq!(decompress_bytes(CodecRegistry::builtin(), &parsed, workers).unwrap(), data);
        for cut_at in [0, bytes.len() / 2, bytes.len() - 1] {
            prop_assert!(Container::from_bytes(&bytes[..cut_at]).is_err());
        }
    }
}
