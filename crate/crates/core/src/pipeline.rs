//! Blocked compression: split the dataset into word-aligned blocks, pack
//! each block per the clustering plan and compress every (block, cluster)
//! stream on its own.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{default_pairing, select_clustering, ScoreMetric};
use crate::codecs::{CodecId, CodecParams, CodecRegistry};
use crate::container::{Container, StreamEntry};
use crate::error::{Error, Result};
use crate::features::{extract_all, FeatureConfig, FeatureSet, DEFAULT_ENTROPY_BLOCK_SIZE};
use crate::par;
use crate::profiles::ProfileRegistry;
use crate::transform::{pack_cluster_into, unpack_cluster};
use crate::typed::{ClusteringPlan, FloatWidth, Packing, TypedView};

pub const DEFAULT_BLOCK_SIZE: usize = 256 * 1024;
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.30;
/// Bytes per sampled piece in dynamic mode, independent of the compression
/// block size.
pub const SAMPLE_UNIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Plan looked up in the static profile registry.
    Static,
    /// Plan computed from a strided sample of the data.
    #[default]
    Dynamic,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Mode::Static),
            "dynamic" => Ok(Mode::Dynamic),
            _ => Err(Error::InvalidConfig(format!("unknown mode {s:?} (expected static or dynamic)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Block size in bytes; must be a multiple of the word width.
    pub block_size: usize,
    pub codec: CodecId,
    pub params: CodecParams,
    pub mode: Mode,
    /// Profile category for static mode.
    pub category: Option<String>,
    pub packing: Packing,
    pub sample_fraction: f64,
    pub worker_count: usize,
    /// Clustering score; `None` picks the width's default pairing.
    pub metric: Option<ScoreMetric>,
    /// Feature coordinates; `None` picks the width's default pairing.
    pub feature_set: Option<FeatureSet>,
    pub entropy_block_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            block_size: DEFAULT_BLOCK_SIZE,
            codec: CodecId::LZ77,
            params: CodecParams::default(),
            mode: Mode::Dynamic,
            category: None,
            packing: Packing::SameByte,
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            worker_count: default_workers(),
            metric: None,
            feature_set: None,
            entropy_block_size: DEFAULT_ENTROPY_BLOCK_SIZE,
        }
    }
}

/// Number of hardware threads, or 1 when unknown.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl PipelineConfig {
    pub fn validate(&self, width: FloatWidth) -> Result<()> {
        let n = width.bytes();
        if self.block_size == 0 || self.block_size % n != 0 {
            return Err(Error::InvalidConfig(format!(
                "block size {} must be a positive multiple of the {n}-byte word width",
                self.block_size
            )));
        }
        if self.block_size > u32::MAX as usize {
            return Err(Error::InvalidConfig(format!("block size {} exceeds 4 GiB", self.block_size)));
        }
        if self.worker_count == 0 {
            return Err(Error::InvalidConfig("worker count must be >= 1".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sample fraction {} must be in (0, 1]",
                self.sample_fraction
            )));
        }
        if let Some(m) = &self.metric {
            m.validate()?;
        }
        self.feature_cfg(width).validate()?;
        self.params.validate()
    }

    /// Feature configuration, with the width's default feature set unless
    /// one is configured.
    pub fn feature_cfg(&self, width: FloatWidth) -> FeatureConfig {
        FeatureConfig {
            entropy_block_size: self.entropy_block_size,
            feature_set: self.feature_set.unwrap_or(default_pairing(width).0),
        }
    }

    pub fn score_metric(&self, width: FloatWidth) -> ScoreMetric {
        self.metric.unwrap_or(default_pairing(width).1)
    }
}

/// Evenly strided whole blocks covering about `fraction` of `v`. Returns `v`
/// itself when every block would be chosen.
pub fn sample_blocks<'a>(v: &'a TypedView<'a>, block_size: usize, fraction: f64) -> TypedView<'a> {
    let per_block = (block_size / v.width().bytes()).max(1);
    let blocks = v.value_count().div_ceil(per_block);
    let take = ((fraction * blocks as f64).ceil() as usize).clamp(1, blocks.max(1));
    if take >= blocks {
        return v.slice_values(0, v.value_count());
    }
    let mut bytes = Vec::new();
    for i in 0..take {
        let b = i * blocks / take;
        let start = b * per_block;
        let end = (start + per_block).min(v.value_count());
        bytes.extend_from_slice(v.slice_values(start, end).as_bytes());
    }
    TypedView::new(Cow::Owned(bytes), v.width()).expect("whole words")
}

/// Chooses the clustering plan for `v`. Half precision always gets two
/// singletons; an empty dataset, which has nothing to measure, gets them too.
pub fn plan_for(v: &TypedView<'_>, cfg: &PipelineConfig, profiles: &ProfileRegistry) -> Result<ClusteringPlan> {
    let width = v.width();
    cfg.validate(width)?;
    if width == FloatWidth::HALF {
        return Ok(ClusteringPlan::singletons(width).with_packing(cfg.packing));
    }
    let plan = match cfg.mode {
        Mode::Static => {
            let category = cfg.category.as_deref().ok_or_else(|| {
                Error::InvalidConfig("static mode needs a profile category (HPC, TS, OBS, DB, ML)".into())
            })?;
            profiles.get(category, width)?.plan.clone()
        }
        Mode::Dynamic if v.is_empty() => ClusteringPlan::singletons(width),
        Mode::Dynamic => {
            let sample = sample_blocks(v, SAMPLE_UNIT, cfg.sample_fraction);
            let fcfg = cfg.feature_cfg(width);
            let xs = par::with_workers(cfg.worker_count, || extract_all(&sample, &fcfg))?;
            let metric = cfg.score_metric(width);
            par::with_workers(cfg.worker_count, || select_clustering(&xs, fcfg.feature_set, &metric))?
        }
    };
    Ok(plan.with_packing(cfg.packing))
}

/// Optional cache sizes used to bound the block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheHints {
    pub l1_bytes: usize,
    pub l2_bytes: usize,
}

/// Block size to use for `dataset_size` bytes on `workers` threads. The
/// configured size is first clamped into `[l1, l2]` when hints are given,
/// then shrunk (staying word aligned, at least one word) until there are at
/// least as many blocks as workers.
pub fn effective_block_size(
    block_size: usize,
    width: FloatWidth,
    dataset_size: usize,
    workers: usize,
    hints: Option<CacheHints>,
) -> usize {
    let n = width.bytes();
    let align = |b: usize| (b / n * n).max(n);
    let mut size = block_size;
    if let Some(h) = hints {
        size = size.clamp(h.l1_bytes.min(h.l2_bytes), h.l2_bytes.max(h.l1_bytes));
    }
    size = align(size);
    if dataset_size == 0 {
        return size;
    }
    if dataset_size.div_ceil(size) < workers.max(1) {
        size = align(dataset_size / workers.max(1));
    }
    size
}

/// Compresses `v` with the built-in codecs.
pub fn compress_pipeline(v: &TypedView<'_>, cfg: &PipelineConfig, plan: &ClusteringPlan) -> Result<Container> {
    compress_pipeline_with(CodecRegistry::builtin(), v, cfg, plan)
}

pub fn compress_pipeline_with(
    registry: &CodecRegistry,
    v: &TypedView<'_>,
    cfg: &PipelineConfig,
    plan: &ClusteringPlan,
) -> Result<Container> {
    let width = v.width();
    cfg.validate(width)?;
    if plan.width() != width {
        return Err(Error::WidthMismatch {
            expected: width.bytes(),
            actual: plan.width().bytes(),
        });
    }
    registry.get(cfg.codec)?;
    let n = width.bytes();
    let k = plan.k();
    let block_count = v.value_count().div_ceil(cfg.block_size / n);
    let data = v.as_bytes();
    // Each worker fills one payload buffer for its contiguous block range.
    let ranges = par::schedule(block_count, cfg.worker_count);
    let parts = par::with_workers(cfg.worker_count, || {
        par::map(&ranges, |r| {
            let mut entries = Vec::with_capacity(r.len() * k);
            let mut payload = Vec::new();
            let mut raw = Vec::new();
            for b in r.clone() {
                let block = &data[b * cfg.block_size..((b + 1) * cfg.block_size).min(data.len())];
                for (c, cluster) in plan.clusters().iter().enumerate() {
                    raw.clear();
                    pack_cluster_into(block, n, cluster, plan.packing(), &mut raw);
                    let at = payload.len();
                    let stored = encode_stream(registry, cfg, &raw, &mut payload).map_err(|e| e.at(b, c))?;
                    entries.push(StreamEntry::for_stream(&payload[at..], stored)?);
                }
            }
            Ok((entries, payload))
        })
    });
    let mut entries = Vec::with_capacity(block_count * k);
    let mut payload = Vec::new();
    for part in parts {
        let (e, p): (Vec<StreamEntry>, Vec<u8>) = part?;
        entries.extend(e);
        payload.extend(p);
    }
    Container::from_parts(
        cfg.codec,
        plan.clone(),
        cfg.block_size as u32,
        v.value_count() as u64,
        entries,
        payload,
        Vec::new(),
    )
}

/// Compresses a raw byte buffer, keeping any trailing partial word verbatim
/// in the container tail.
pub fn compress_bytes(
    registry: &CodecRegistry,
    data: &[u8],
    width: FloatWidth,
    cfg: &PipelineConfig,
    plan: &ClusteringPlan,
) -> Result<Container> {
    let whole = data.len() / width.bytes() * width.bytes();
    let v = crate::typed::view(&data[..whole], width)?;
    let mut c = compress_pipeline_with(registry, &v, cfg, plan)?;
    c.tail = data[whole..].to_vec();
    Ok(c)
}

/// Appends the compressed frame for one packed stream to `out` and reports
/// whether it fell back to the store codec.
fn encode_stream(registry: &CodecRegistry, cfg: &PipelineConfig, raw: &[u8], out: &mut Vec<u8>) -> Result<bool> {
    let mut params = cfg.params;
    if cfg.codec == CodecId::XOR_DELTA {
        // Streams are packed byte groups whose length need not be a multiple
        // of the configured word; use the widest word that fits.
        match FloatWidth::ALL
            .iter()
            .rev()
            .find(|w| w.bytes() <= params.xor_word_width.bytes() && raw.len() % w.bytes() == 0)
        {
            Some(&w) => params.xor_word_width = w,
            None => {
                store_frame(raw, out);
                return Ok(true);
            }
        }
    }
    let compressed = registry.compress(cfg.codec, &params, raw)?;
    if compressed.len() > raw.len() + 1 {
        store_frame(raw, out);
        Ok(true)
    } else {
        out.extend_from_slice(&compressed);
        Ok(false)
    }
}

fn store_frame(raw: &[u8], out: &mut Vec<u8>) {
    out.push(CodecId::STORE.0 as u8);
    out.extend_from_slice(raw);
}

/// Decompresses with the built-in codecs.
pub fn decompress_pipeline(c: &Container, workers: usize) -> Result<TypedView<'static>> {
    decompress_pipeline_with(CodecRegistry::builtin(), c, workers)
}

pub fn decompress_pipeline_with(registry: &CodecRegistry, c: &Container, workers: usize) -> Result<TypedView<'static>> {
    registry.get(c.codec)?;
    let n = c.width().bytes();
    let block_size = c.block_size as usize;
    let mut out = vec![0u8; c.value_count as usize * n];
    // Hand each worker the output bytes of its contiguous block range.
    let mut chunks = Vec::new();
    let mut rest = &mut out[..];
    for r in par::schedule(c.block_count as usize, workers) {
        let len = (r.len() * block_size).min(rest.len());
        let (head, tail) = rest.split_at_mut(len);
        chunks.push((r, head));
        rest = tail;
    }
    let results = par::with_workers(workers, || {
        par::map_mut(&mut chunks, |(r, buf)| {
            for (b, block) in r.clone().zip(buf.chunks_mut(block_size)) {
                for (ci, cluster) in c.plan.clusters().iter().enumerate() {
                    let stream = decode_stream(registry, c, b, ci)?;
                    unpack_cluster(block, n, cluster, c.packing(), &stream).map_err(|e| e.at(b, ci))?;
                }
            }
            Ok(())
        })
    });
    results.into_iter().collect::<Result<Vec<()>>>()?;
    TypedView::owned(out, c.width())
}

/// Decompresses to raw bytes, including the tail.
pub fn decompress_bytes(registry: &CodecRegistry, c: &Container, workers: usize) -> Result<Vec<u8>> {
    let mut out = decompress_pipeline_with(registry, c, workers)?.into_bytes();
    out.extend_from_slice(&c.tail);
    Ok(out)
}

/// Decodes the packed bytes of cluster `cluster` of block `block`, needing
/// nothing but the header and that one stream.
pub fn decode_stream(registry: &CodecRegistry, c: &Container, block: usize, cluster: usize) -> Result<Vec<u8>> {
    let (stream, entry) = c.stream(block, cluster);
    let expected = c.block_values(block) * c.plan.clusters()[cluster].len();
    decode_checked(registry, c.codec, stream, entry, expected).map_err(|e| e.at(block, cluster))
}

fn decode_checked(
    registry: &CodecRegistry,
    codec: CodecId,
    stream: &[u8],
    entry: StreamEntry,
    expected: usize,
) -> Result<Vec<u8>> {
    if crc32fast::hash(stream) != entry.crc {
        return Err(Error::corrupt(0, "checksum mismatch"));
    }
    let codec = if entry.stored { CodecId::STORE } else { codec };
    let out = registry.decompress(codec, stream)?;
    if out.len() != expected {
        return Err(Error::corrupt(
            0,
            format!("stream decodes to {} bytes, expected {expected}", out.len()),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typed::view;

    fn floats(n: usize) -> Vec<u8> {
        (0..n).flat_map(|i| (1.0 + (i as f32 * 0.01).sin()).to_le_bytes()).collect()
    }

    fn cfg(block_size: usize, codec: CodecId, workers: usize) -> PipelineConfig {
        PipelineConfig {
            block_size,
            codec,
            worker_count: workers,
            ..Default::default()
        }
    }

    #[test]
    fn empty_dataset_has_no_blocks() {
        let v = view(&[], FloatWidth::SINGLE).unwrap();
        let c = compress_pipeline(&v, &cfg(4096, CodecId::LZ77, 1), &ClusteringPlan::identity(FloatWidth::SINGLE)).unwrap();
        assert_eq!(c.block_count, 0);
        let back = decompress_pipeline(&Container::from_bytes(&c.to_bytes()).unwrap(), 1).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn small_dataset_is_one_block() {
        let data = floats(100);
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        let plan = ClusteringPlan::new(FloatWidth::SINGLE, "{1,2}|{3}|{4}".parse().unwrap(), Packing::SameByte).unwrap();
        let c = compress_pipeline(&v, &cfg(DEFAULT_BLOCK_SIZE, CodecId::HUFFMAN, 2), &plan).unwrap();
        assert_eq!(c.block_count, 1);
        // One block means each stream is exactly the unblocked transform's.
        let packed = crate::transform::pack(&v, &plan).unwrap();
        for (ci, s) in packed.streams.iter().enumerate() {
            assert_eq!(&decode_stream(CodecRegistry::builtin(), &c, 0, ci).unwrap(), s);
        }
        assert_eq!(decompress_pipeline(&c, 1).unwrap().as_bytes(), &data[..]);
    }

    #[test]
    fn every_codec_round_trips_with_short_last_block() {
        let data = floats(1000);
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        for codec in [CodecId::STORE, CodecId::LZ77, CodecId::HUFFMAN, CodecId::XOR_DELTA] {
            for packing in [Packing::SameByte, Packing::SameValue] {
                let plan = ClusteringPlan::new(FloatWidth::SINGLE, "{1,4}|{2,3}".parse().unwrap(), packing).unwrap();
                let c = compress_pipeline(&v, &cfg(4 * 333, codec, 3), &plan).unwrap();
                assert_eq!(c.block_count, 4);
                let parsed = Container::from_bytes(&c.to_bytes()).unwrap();
                assert_eq!(decompress_pipeline(&parsed, 2).unwrap().as_bytes(), &data[..], "{codec}");
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let data = floats(5000);
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        let plan = ClusteringPlan::singletons(FloatWidth::SINGLE);
        let one = compress_pipeline(&v, &cfg(1024, CodecId::LZ77, 1), &plan).unwrap().to_bytes();
        for w in [2, 3, 8] {
            assert_eq!(compress_pipeline(&v, &cfg(1024, CodecId::LZ77, w), &plan).unwrap().to_bytes(), one);
        }
    }

    #[test]
    fn incompressible_streams_are_stored() {
        let data = crate::synth::random_bytes(16_000, 9);
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        let c = compress_pipeline(&v, &cfg(16000, CodecId::LZ77, 1), &ClusteringPlan::singletons(FloatWidth::SINGLE)).unwrap();
        assert!(c.entries.iter().any(|e| e.stored));
        assert!(c.payload.len() <= data.len() + c.entries.len());
        assert_eq!(decompress_pipeline(&c, 1).unwrap().as_bytes(), &data[..]);
    }

    #[test]
    fn flipped_payload_byte_names_block() {
        let data = floats(4000);
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        let c = compress_pipeline(&v, &cfg(4000, CodecId::LZ77, 1), &ClusteringPlan::singletons(FloatWidth::SINGLE)).unwrap();
        let mut bytes = c.to_bytes();
        let (s, _) = c.stream(2, 1);
        let at = c.header_len() + (s.as_ptr() as usize - c.payload.as_ptr() as usize) + s.len() / 2;
        bytes[at] ^= 0x10;
        let err = decompress_pipeline(&Container::from_bytes(&bytes).unwrap(), 1).unwrap_err();
        assert_eq!(err.location(), Some((2, 1)));
        assert!(err.is_corrupt());
    }

    #[test]
    fn unknown_codec_fails_cleanly() {
        let v = view(&[0; 16], FloatWidth::SINGLE).unwrap();
        let plan = ClusteringPlan::identity(FloatWidth::SINGLE);
        assert!(matches!(
            compress_pipeline(&v, &cfg(16, CodecId(16), 1), &plan),
            Err(Error::UnknownCodec(16))
        ));
        let mut c = compress_pipeline(&v, &cfg(16, CodecId::LZ77, 1), &plan).unwrap();
        c.codec = CodecId(16);
        let parsed = Container::from_bytes(&c.to_bytes()).unwrap();
        assert!(matches!(decompress_pipeline(&parsed, 1), Err(Error::UnknownCodec(16))));
    }

    #[test]
    fn tail_passthrough() {
        let mut data = floats(10);
        data.extend_from_slice(&[1, 2, 3]);
        let r = CodecRegistry::builtin();
        let c = compress_bytes(r, &data, FloatWidth::SINGLE, &cfg(16, CodecId::LZ77, 1), &ClusteringPlan::identity(FloatWidth::SINGLE)).unwrap();
        assert_eq!(c.tail, vec![1, 2, 3]);
        let parsed = Container::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(decompress_bytes(r, &parsed, 1).unwrap(), data);
    }

    #[test]
    fn block_size_policy() {
        let mb = 1 << 20;
        let w = FloatWidth::SINGLE;
        assert_eq!(effective_block_size(256 * 1024, w, 100 * 1000 * 1000, 16, None), 256 * 1024);
        assert_eq!(effective_block_size(mb, w, mb, 8, None), 128 * 1024);
        assert_eq!(effective_block_size(DEFAULT_BLOCK_SIZE, w, 16, 8, None), 4);
        assert_eq!(effective_block_size(DEFAULT_BLOCK_SIZE, FloatWidth::DOUBLE, 32, 3, None), 8);
        let hints = CacheHints { l1_bytes: 32 * 1024, l2_bytes: 128 * 1024 };
        assert_eq!(effective_block_size(mb, w, 100 * mb, 4, Some(hints)), 128 * 1024);
        assert_eq!(effective_block_size(4, w, 100 * mb, 4, Some(hints)), 32 * 1024);
    }

    #[test]
    fn config_validation() {
        let w = FloatWidth::DOUBLE;
        assert!(PipelineConfig::default().validate(w).is_ok());
        let bad = [
            PipelineConfig { block_size: 12, ..Default::default() },
            PipelineConfig { worker_count: 0, ..Default::default() },
            PipelineConfig { sample_fraction: 0.0, ..Default::default() },
            PipelineConfig { sample_fraction: 1.5, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(w), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn static_and_dynamic_plans() {
        let data = floats(20_000);
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        let profiles = ProfileRegistry::builtin();
        let stat = PipelineConfig { mode: Mode::Static, category: Some("TS".into()), ..Default::default() };
        assert_eq!(plan_for(&v, &stat, &profiles).unwrap(), profiles.get("TS", FloatWidth::SINGLE).unwrap().plan);
        let missing = PipelineConfig { category: Some("GEO".into()), ..stat.clone() };
        assert!(matches!(plan_for(&v, &missing, &profiles), Err(Error::MissingProfile { .. })));

        let full = PipelineConfig { block_size: 4096, sample_fraction: 1.0, ..Default::default() };
        let fcfg = full.feature_cfg(FloatWidth::SINGLE);
        let xs = extract_all(&v, &fcfg).unwrap();
        let direct = select_clustering(&xs, fcfg.feature_set, &full.score_metric(FloatWidth::SINGLE)).unwrap();
        assert_eq!(plan_for(&v, &full, &profiles).unwrap(), direct);

        let half = view(&data, FloatWidth::HALF).unwrap();
        assert_eq!(plan_for(&half, &full, &profiles).unwrap().to_string(), "{1}|{2}");
    }

    #[test]
    fn strided_sample_picks_spread_blocks() {
        let data: Vec<u8> = (0..100u32).flat_map(|i| i.to_le_bytes()).collect();
        let v = view(&data, FloatWidth::SINGLE).unwrap();
        let s = sample_blocks(&v, 40, 0.3);
        let firsts: Vec<u32> = s.as_bytes().chunks_exact(40).map(|b| u32::from_le_bytes(b[..4].try_into().unwrap())).collect();
        assert_eq!(firsts, vec![0, 30, 60]);
        assert_eq!(sample_blocks(&v, 40, 1.0).as_bytes(), &data[..]);
    }
}
