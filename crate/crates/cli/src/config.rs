//! Settings from flags, environment and an optional TOML file. Flags win
//! over the environment, which wins over the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;

use tdt_core::clustering::{MetricKind, ScoreMetric};
use tdt_core::features::FeatureSet;
use tdt_core::pipeline::{effective_block_size, DEFAULT_BLOCK_SIZE, DEFAULT_SAMPLE_FRACTION};
use tdt_core::profiles::ProfileRegistry;
use tdt_core::{CodecRegistry, FloatWidth, Mode, Packing, Partition, PipelineConfig};

use crate::error::{CliError, CliResult};

pub const ENV_WORKERS: &str = "TDT_WORKERS";
pub const ENV_PROFILES: &str = "TDT_PROFILES";

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with default settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads [env: TDT_WORKERS] [default: all cores].
    #[arg(long, short = 'j', global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Static profile file [env: TDT_PROFILES] [default: built-in].
    #[arg(long, global = true, value_name = "FILE")]
    pub profiles: Option<PathBuf>,
    /// Print progress and summaries to stderr; repeat for more.
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

/// Options that shape the compression pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Codec name: store, lz77, huffman, xor_delta (zstd with that feature).
    #[arg(long, value_name = "NAME")]
    pub codec: Option<String>,
    /// How the plan is chosen: dynamic or static.
    #[arg(long, value_name = "MODE")]
    pub mode: Option<String>,
    /// Profile category for static mode: HPC, TS, OBS, DB or ML.
    #[arg(long, value_name = "NAME")]
    pub category: Option<String>,
    /// Use this plan instead of choosing one, e.g. "{1,2}|{3}|{4}".
    #[arg(long, value_name = "PLAN")]
    pub plan: Option<String>,
    /// Block size in bytes; K, M and G suffixes allowed [default: 256K].
    #[arg(long, value_name = "SIZE")]
    pub block_size: Option<String>,
    /// Shrink the block size so every worker gets a block. Output then
    /// depends on the worker count.
    #[arg(long)]
    pub auto_block: bool,
    /// Stream layout: same_byte or same_value.
    #[arg(long, value_name = "PACKING")]
    pub packing: Option<String>,
    /// Share of the data sampled in dynamic mode, in (0, 1].
    #[arg(long, value_name = "F")]
    pub sample_fraction: Option<f64>,
    /// Clustering score: silhouette, davies_bouldin, calinski_harabasz, gap_statistic.
    #[arg(long, value_name = "NAME")]
    pub metric: Option<String>,
    /// Feature coordinates: entropy_only, frequency_only or combined.
    #[arg(long, value_name = "SET")]
    pub features: Option<String>,
    /// Window for per-block feature entropies, in bytes.
    #[arg(long, value_name = "SIZE")]
    pub entropy_block_size: Option<String>,
    /// LZ77 window in bytes (power of two, at least 256).
    #[arg(long, value_name = "SIZE")]
    pub lz77_window: Option<String>,
    /// Shortest LZ77 match.
    #[arg(long, value_name = "N")]
    pub lz77_min_match: Option<usize>,
    /// Lazy LZ77 matching.
    #[arg(long)]
    pub lz77_lazy: bool,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub codec: Option<String>,
    pub mode: Option<String>,
    pub category: Option<String>,
    pub block_size: Option<Size>,
    pub auto_block: Option<bool>,
    pub packing: Option<String>,
    pub sample_fraction: Option<f64>,
    pub workers: Option<usize>,
    pub profiles: Option<PathBuf>,
    pub metric: Option<String>,
    pub features: Option<String>,
    pub entropy_block_size: Option<Size>,
    #[serde(default)]
    pub lz77: Lz77Config,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lz77Config {
    pub window: Option<Size>,
    pub min_match: Option<usize>,
    pub lazy: Option<bool>,
}

/// A byte count written either as an integer or as text with a suffix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Size {
    Bytes(u64),
    Text(String),
}

impl Size {
    fn bytes(&self, key: &str) -> CliResult<usize> {
        match self {
            Size::Bytes(b) => Ok(*b as usize),
            Size::Text(s) => parse_size(s).map_err(|e| CliError::usage(format!("config {key}: {e}"))),
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }
}

/// Parses `123`, `64K`, `1M` or `2G` (binary multiples).
pub fn parse_size(s: &str) -> Result<usize, String> {
    let t = s.trim();
    let (digits, mult) = match t.char_indices().last() {
        Some((i, 'k' | 'K')) => (&t[..i], 1 << 10),
        Some((i, 'm' | 'M')) => (&t[..i], 1 << 20),
        Some((i, 'g' | 'G')) => (&t[..i], 1 << 30),
        _ => (t, 1),
    };
    digits
        .parse::<usize>()
        .ok()
        .and_then(|n| n.checked_mul(mult))
        .ok_or_else(|| format!("invalid size {s:?}"))
}

/// Resolved global settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub file: FileConfig,
    pub workers: usize,
    pub profiles_path: Option<PathBuf>,
    pub verbose: u8,
}

impl Settings {
    pub fn load(global: &GlobalArgs) -> CliResult<Self> {
        let file = match &global.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::resolve(global, file, |k| std::env::var(k).ok())
    }

    pub fn resolve(global: &GlobalArgs, file: FileConfig, env: impl Fn(&str) -> Option<String>) -> CliResult<Self> {
        let env_workers = env(ENV_WORKERS)
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::usage(format!("{ENV_WORKERS}={s:?} is not a worker count")))
            })
            .transpose()?;
        let workers = global
            .workers
            .or(env_workers)
            .or(file.workers)
            .unwrap_or_else(tdt_core::pipeline::default_workers);
        if workers == 0 {
            return Err(CliError::usage("worker count must be at least 1"));
        }
        let profiles_path = global
            .profiles
            .clone()
            .or_else(|| env(ENV_PROFILES).map(PathBuf::from))
            .or_else(|| file.profiles.clone());
        Ok(Settings {
            file,
            workers,
            profiles_path,
            verbose: global.verbose,
        })
    }

    pub fn profiles(&self) -> CliResult<ProfileRegistry> {
        match &self.profiles_path {
            Some(p) => Ok(ProfileRegistry::load(p)?),
            None => Ok(ProfileRegistry::builtin()),
        }
    }

    /// Pipeline configuration for `dataset_len` bytes of `width`-byte words.
    pub fn pipeline(
        &self,
        args: &PipelineArgs,
        width: FloatWidth,
        registry: &CodecRegistry,
        dataset_len: usize,
    ) -> CliResult<PipelineConfig> {
        let f = &self.file;
        let mut cfg = PipelineConfig {
            worker_count: self.workers,
            ..Default::default()
        };
        if let Some(name) = args.codec.as_ref().or(f.codec.as_ref()) {
            cfg.codec = registry.by_name(name)?;
        }
        if let Some(m) = args.mode.as_ref().or(f.mode.as_ref()) {
            cfg.mode = Mode::from_str(m)?;
        }
        cfg.category = args.category.clone().or_else(|| f.category.clone());
        if let Some(p) = args.packing.as_ref().or(f.packing.as_ref()) {
            cfg.packing = Packing::from_str(p)?;
        }
        cfg.sample_fraction = args.sample_fraction.or(f.sample_fraction).unwrap_or(DEFAULT_SAMPLE_FRACTION);
        if let Some(m) = args.metric.as_ref().or(f.metric.as_ref()) {
            cfg.metric = Some(ScoreMetric::new(MetricKind::from_str(m)?));
        }
        if let Some(s) = args.features.as_ref().or(f.features.as_ref()) {
            cfg.feature_set = Some(FeatureSet::from_str(s)?);
        }
        if let Some(b) = size_setting(&args.entropy_block_size, &f.entropy_block_size, "entropy_block_size")? {
            cfg.entropy_block_size = b;
        }
        if let Some(w) = size_setting(&args.lz77_window, &f.lz77.window, "lz77.window")? {
            cfg.params.lz77_window = w;
        }
        if let Some(m) = args.lz77_min_match.or(f.lz77.min_match) {
            cfg.params.lz77_min_match = m;
        }
        cfg.params.lz77_lazy = args.lz77_lazy || f.lz77.lazy.unwrap_or(false);
        cfg.params.xor_word_width = width;
        let block = size_setting(&args.block_size, &f.block_size, "block_size")?.unwrap_or(DEFAULT_BLOCK_SIZE);
        cfg.block_size = if args.auto_block || f.auto_block.unwrap_or(false) {
            effective_block_size(block, width, dataset_len, cfg.worker_count, None)
        } else {
            block
        };
        cfg.validate(width)?;
        Ok(cfg)
    }
}

fn size_setting(flag: &Option<String>, file: &Option<Size>, key: &str) -> CliResult<Option<usize>> {
    match (flag, file) {
        (Some(s), _) => parse_size(s).map(Some).map_err(CliError::usage),
        (None, Some(s)) => s.bytes(key).map(Some),
        (None, None) => Ok(None),
    }
}

/// Parses an explicit `--plan` for `width`.
pub fn explicit_plan(text: &str, width: FloatWidth, packing: Packing) -> CliResult<tdt_core::ClusteringPlan> {
    let partition = Partition::from_str(text)?;
    if partition.n() != width.bytes() {
        return Err(CliError::usage(format!(
            "plan {text} covers {} byte positions, the word width is {}",
            partition.n(),
            width.bytes()
        )));
    }
    Ok(tdt_core::ClusteringPlan::new(width, partition, packing)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdt_core::CodecId;

    fn env_of(pairs: &'static [(&'static str, &'static str)]) -> impl Fn(&str) -> Option<String> {
        move |k| pairs.iter().find(|(n, _)| *n == k).map(|(_, v)| v.to_string())
    }

    #[test]
    fn sizes_take_binary_suffixes() {
        assert_eq!(parse_size("4096").unwrap(), 4096);
        assert_eq!(parse_size("64K").unwrap(), 65536);
        assert_eq!(parse_size("1m").unwrap(), 1 << 20);
        assert_eq!(parse_size("2G").unwrap(), 2 << 30);
        assert!(parse_size("").is_err());
        assert!(parse_size("K").is_err());
        assert!(parse_size("12x").is_err());
    }

    #[test]
    fn flags_beat_env_beat_file() {
        let file = FileConfig {
            workers: Some(3),
            profiles: Some("file.txt".into()),
            ..Default::default()
        };
        let none = GlobalArgs::default();
        let s = Settings::resolve(&none, file.clone(), env_of(&[])).unwrap();
        assert_eq!((s.workers, s.profiles_path.unwrap()), (3, PathBuf::from("file.txt")));

        let env = env_of(&[(ENV_WORKERS, "5"), (ENV_PROFILES, "env.txt")]);
        let s = Settings::resolve(&none, file.clone(), &env).unwrap();
        assert_eq!((s.workers, s.profiles_path.unwrap()), (5, PathBuf::from("env.txt")));

        let flags = GlobalArgs {
            workers: Some(7),
            profiles: Some("flag.txt".into()),
            ..Default::default()
        };
        let s = Settings::resolve(&flags, file, &env).unwrap();
        assert_eq!((s.workers, s.profiles_path.unwrap()), (7, PathBuf::from("flag.txt")));
    }

    #[test]
    fn bad_env_and_zero_workers_are_usage_errors() {
        let g = GlobalArgs::default();
        assert!(Settings::resolve(&g, FileConfig::default(), env_of(&[(ENV_WORKERS, "many")])).is_err());
        assert!(Settings::resolve(&g, FileConfig::default(), env_of(&[(ENV_WORKERS, "0")])).is_err());
    }

    #[test]
    fn file_keys_fill_the_pipeline_config() {
        let file = FileConfig::parse(
            r#"
            codec = "huffman"
            mode = "static"
            category = "HPC"
            block_size = "64K"
            packing = "same_value"
            sample_fraction = 0.5
            metric = "gap_statistic"
            features = "entropy_only"
            [lz77]
            window = 1024
            min_match = 4
            lazy = true
            "#,
        )
        .unwrap();
        let s = Settings::resolve(&GlobalArgs::default(), file, env_of(&[])).unwrap();
        let cfg = s
            .pipeline(&PipelineArgs::default(), FloatWidth::DOUBLE, CodecRegistry::builtin(), 0)
            .unwrap();
        assert_eq!(cfg.codec, CodecId::HUFFMAN);
        assert_eq!(cfg.mode, Mode::Static);
        assert_eq!(cfg.category.as_deref(), Some("HPC"));
        assert_eq!(cfg.block_size, 65536);
        assert_eq!(cfg.packing, Packing::SameValue);
        assert_eq!(cfg.sample_fraction, 0.5);
        assert_eq!(cfg.metric.unwrap().kind, MetricKind::GapStatistic);
        assert_eq!(cfg.feature_set, Some(FeatureSet::EntropyOnly));
        assert_eq!(
            (cfg.params.lz77_window, cfg.params.lz77_min_match, cfg.params.lz77_lazy),
            (1024, 4, true)
        );
        assert_eq!(cfg.params.xor_word_width, FloatWidth::DOUBLE);

        let args = PipelineArgs {
            codec: Some("lz77".into()),
            block_size: Some("8K".into()),
            ..Default::default()
        };
        let cfg = s.pipeline(&args, FloatWidth::DOUBLE, CodecRegistry::builtin(), 0).unwrap();
        assert_eq!((cfg.codec, cfg.block_size), (CodecId::LZ77, 8192));
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        assert!(FileConfig::parse("colour = 1").is_err());
        let s = Settings::resolve(&GlobalArgs::default(), FileConfig::default(), env_of(&[])).unwrap();
        let bad = |args: PipelineArgs| s.pipeline(&args, FloatWidth::SINGLE, CodecRegistry::builtin(), 0).is_err();
        assert!(bad(PipelineArgs {
            codec: Some("lzma".into()),
            ..Default::default()
        }));
        assert!(bad(PipelineArgs {
            block_size: Some("6".into()),
            ..Default::default()
        }));
        assert!(bad(PipelineArgs {
            sample_fraction: Some(0.0),
            ..Default::default()
        }));
    }

    #[test]
    fn auto_block_gives_every_worker_a_block() {
        let g = GlobalArgs {
            workers: Some(4),
            ..Default::default()
        };
        let s = Settings::resolve(&g, FileConfig::default(), env_of(&[])).unwrap();
        let args = PipelineArgs {
            auto_block: true,
            ..Default::default()
        };
        let cfg = s.pipeline(&args, FloatWidth::SINGLE, CodecRegistry::builtin(), 4000).unwrap();
        assert_eq!(cfg.block_size, 1000);
    }
}
