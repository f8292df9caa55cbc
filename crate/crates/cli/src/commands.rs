//! Subcommand implementations. Reports go to `out`; progress notes go to
//! stderr when verbose.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use walkdir::WalkDir;

use tdt_core::analysis::{
    entropy_profile, geometric_mean, order_k_entropy, report, AnalysisRecord, BenchRecord, ANALYSIS_SCHEMA,
    BENCH_SCHEMA,
};
use tdt_core::clustering::score_candidates;
use tdt_core::features::{extract_all, FeatureConfig};
use tdt_core::pipeline::{compress_bytes, decompress_bytes, plan_for, sample_blocks, SAMPLE_UNIT};
use tdt_core::profiles::ProfileRegistry;
use tdt_core::typed::view;
use tdt_core::{ClusteringPlan, CodecRegistry, Container, FloatWidth, Mode, Packing, PipelineConfig, TypedView};

use crate::config::{explicit_plan, parse_size, PipelineArgs, Settings};
use crate::error::{CliError, CliResult};

/// Path that stands for stdin or stdout.
pub const STDIO: &str = "-";

#[derive(Debug, Clone, Args)]
pub struct CompressArgs {
    /// Bytes per value: 2, 4 or 8 (or f16, f32, f64).
    #[arg(long, short = 'w', value_parser = parse_width)]
    pub width: FloatWidth,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Raw little-endian floats, or - for stdin.
    pub input: PathBuf,
    /// Container to write, or - for stdout.
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DecompressArgs {
    /// Container, or - for stdin.
    pub input: PathBuf,
    /// Raw output, or - for stdout.
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long, short = 'w', value_parser = parse_width)]
    pub width: FloatWidth,
    /// Highest context order for H_k.
    #[arg(long, default_value_t = 8, value_name = "K")]
    pub max_order: usize,
    /// Window for per-block entropies, in bytes.
    #[arg(long, value_name = "SIZE")]
    pub entropy_block_size: Option<String>,
    /// Print one JSON record instead of tables.
    #[arg(long)]
    pub json: bool,
    /// Raw little-endian floats, or - for stdin.
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long, short = 'w', value_parser = parse_width)]
    pub width: FloatWidth,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Raw little-endian floats, or - for stdin.
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Word width for every file; by default taken from the extension
    /// (.f16/.hp, .f32/.sp, .f64/.dp).
    #[arg(long, short = 'w', value_parser = parse_width)]
    pub width: Option<FloatWidth>,
    /// Comma-separated codec names [default: lz77,huffman,xor_delta].
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub codecs: Vec<String>,
    /// Comma-separated plan modes [default: dynamic].
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub modes: Vec<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Print JSON lines instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write JSON lines to this file.
    #[arg(long, value_name = "FILE")]
    pub records: Option<PathBuf>,
    /// A dataset file or a directory searched recursively.
    pub input: PathBuf,
}

pub fn parse_width(s: &str) -> Result<FloatWidth, String> {
    let bytes = match s {
        "f16" | "half" => 2,
        "f32" | "single" => 4,
        "f64" | "double" => 8,
        _ => s.parse::<usize>().map_err(|_| format!("invalid width {s:?}"))?,
    };
    FloatWidth::new(bytes).map_err(|e| e.to_string())
}

fn width_from_extension(path: &Path) -> Option<FloatWidth> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "f16" | "hp" => Some(FloatWidth::HALF),
        "f32" | "sp" => Some(FloatWidth::SINGLE),
        "f64" | "dp" => Some(FloatWidth::DOUBLE),
        _ => None,
    }
}

pub fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    if path.as_os_str() == STDIO {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map_err(|e| CliError::io(path, e))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| CliError::io(path, e))
    }
}

pub fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if path.as_os_str() == STDIO {
        let mut w = io::stdout().lock();
        w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
    } else {
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))
    }
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

/// Whole words of `data`, leaving any trailing partial word out.
fn whole_words(data: &[u8], width: FloatWidth) -> TypedView<'_> {
    let whole = data.len() / width.bytes() * width.bytes();
    view(&data[..whole], width).expect("whole words")
}

/// The plan for `v`: the explicit one if given, otherwise chosen by mode.
fn choose_plan(
    v: &TypedView<'_>,
    cfg: &PipelineConfig,
    args: &PipelineArgs,
    settings: &Settings,
) -> CliResult<ClusteringPlan> {
    if let Some(text) = &args.plan {
        return explicit_plan(text, v.width(), cfg.packing);
    }
    let profiles = match cfg.mode {
        Mode::Static => settings.profiles()?,
        Mode::Dynamic => ProfileRegistry::default(),
    };
    Ok(plan_for(v, cfg, &profiles)?)
}

pub fn compress(settings: &Settings, args: &CompressArgs) -> CliResult<()> {
    let data = read_input(&args.input)?;
    let registry = CodecRegistry::with_adapters();
    let v = whole_words(&data, args.width);
    let cfg = settings.pipeline(&args.pipeline, args.width, &registry, v.as_bytes().len())?;
    let plan = choose_plan(&v, &cfg, &args.pipeline, settings)?;
    let c = compress_bytes(&registry, &data, args.width, &cfg, &plan)?;
    let bytes = c.to_bytes();
    write_output(&args.output, &bytes)?;
    if settings.verbose > 0 {
        let r = report(data.len() as u64, bytes.len() as u64, None);
        eprintln!(
            "{}: {} -> {} bytes, CR {:.3}, plan {} {}, codec {}, block {} B, {} tail bytes",
            args.input.display(),
            data.len(),
            bytes.len(),
            r.cr,
            plan,
            plan.packing(),
            registry.name_of(cfg.codec).unwrap_or("?"),
            cfg.block_size,
            c.tail.len()
        );
    }
    Ok(())
}

pub fn decompress(settings: &Settings, args: &DecompressArgs) -> CliResult<()> {
    let bytes = read_input(&args.input)?;
    let registry = CodecRegistry::with_adapters();
    let c = Container::from_bytes(&bytes)?;
    let data = decompress_bytes(&registry, &c, settings.workers)?;
    write_output(&args.output, &data)?;
    if settings.verbose > 0 {
        eprintln!(
            "{}: {} -> {} bytes, width {}, plan {} {}",
            args.input.display(),
            bytes.len(),
            data.len(),
            c.width(),
            c.plan,
            c.packing()
        );
    }
    Ok(())
}

fn dataset_name(path: &Path) -> String {
    if path.as_os_str() == STDIO {
        "<stdin>".to_string()
    } else {
        path.display().to_string()
    }
}

pub fn analyze(_settings: &Settings, args: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    let data = read_input(&args.input)?;
    let v = whole_words(&data, args.width);
    let mut fcfg = FeatureConfig::default();
    if let Some(s) = &args.entropy_block_size {
        fcfg.entropy_block_size = parse_size(s).map_err(CliError::usage)?;
    }
    let profile = entropy_profile(&v, &fcfg)?;
    let bytes = v.as_bytes();
    let order_k = (0..=args.max_order.min(bytes.len().saturating_sub(1)))
        .map(|k| order_k_entropy(bytes, k).map(|h| (k, h)))
        .collect::<Result<Vec<_>, _>>()?;
    let record = AnalysisRecord {
        schema: ANALYSIS_SCHEMA.to_string(),
        dataset: dataset_name(&args.input),
        width: args.width.bytes(),
        size: bytes.len() as u64,
        profile,
        order_k,
    };
    if args.json {
        let line = serde_json::to_string(&record).expect("records serialize");
        return writeln!(out, "{line}").map_err(stdout_err);
    }
    write_analysis(&record, out).map_err(stdout_err)
}

fn write_analysis(r: &AnalysisRecord, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "dataset  {}", r.dataset)?;
    writeln!(out, "width    {}", r.width)?;
    writeln!(out, "size     {} bytes", r.size)?;
    writeln!(out, "entropy  {:.6} bits/byte", r.profile.dataset_entropy)?;
    writeln!(out)?;
    writeln!(out, "position  avg_entropy  whole_entropy")?;
    for g in &r.profile.per_group {
        writeln!(out, "{:>8}  {:>11.6}  {:>13.6}", g.position, g.avg_entropy, g.whole_entropy)?;
    }
    writeln!(out)?;
    writeln!(out, "order  H_k")?;
    for (k, h) in &r.order_k {
        writeln!(out, "{k:>5}  {h:.6}")?;
    }
    Ok(())
}

pub fn plan(settings: &Settings, args: &PlanArgs, out: &mut dyn Write) -> CliResult<()> {
    let data = read_input(&args.input)?;
    let registry = CodecRegistry::with_adapters();
    let v = whole_words(&data, args.width);
    let cfg = settings.pipeline(&args.pipeline, args.width, &registry, v.as_bytes().len())?;
    let plan = choose_plan(&v, &cfg, &args.pipeline, settings)?;
    let w = |e| stdout_err(e);
    writeln!(out, "{plan}").map_err(w)?;
    let scored = args.pipeline.plan.is_none()
        && cfg.mode == Mode::Dynamic
        && args.width != FloatWidth::HALF
        && !v.is_empty();
    if !scored {
        let why = if args.pipeline.plan.is_some() {
            "explicit plan".to_string()
        } else if cfg.mode == Mode::Static {
            format!("static profile {}", cfg.category.as_deref().unwrap_or(""))
        } else if args.width == FloatWidth::HALF {
            "half precision always uses two singletons".to_string()
        } else {
            "empty input".to_string()
        };
        return writeln!(out, "# {why}").map_err(w);
    }
    // Same sample and features the planner used, scored for every cut.
    let sample = sample_blocks(&v, SAMPLE_UNIT, cfg.sample_fraction);
    let fcfg = cfg.feature_cfg(args.width);
    let metric = cfg.score_metric(args.width);
    let xs = extract_all(&sample, &fcfg)?;
    let candidates = score_candidates(&xs, fcfg.feature_set, &metric)?;
    writeln!(out, "# features {}, metric {}", fcfg.feature_set, metric.kind).map_err(w)?;
    writeln!(out, "k  {:>14}  partition", "score").map_err(w)?;
    for c in &candidates {
        let mark = if c.partition == *plan.partition() { "  *" } else { "" };
        writeln!(out, "{}  {:>14.6}  {}{mark}", c.k, c.score, c.partition).map_err(w)?;
    }
    Ok(())
}

/// One dataset found by `bench`.
struct BenchInput {
    path: PathBuf,
    name: String,
    width: FloatWidth,
}

fn bench_inputs(args: &BenchArgs, verbose: bool) -> CliResult<Vec<BenchInput>> {
    let mut inputs = Vec::new();
    for entry in WalkDir::new(&args.input).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(&args.input).to_path_buf();
            CliError::io(&path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let Some(width) = args.width.or_else(|| width_from_extension(path)) else {
            if verbose {
                eprintln!("skipping {}: unknown width (pass --width)", path.display());
            }
            continue;
        };
        let name = path
            .strip_prefix(&args.input)
            .ok()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(path)
            .display()
            .to_string();
        inputs.push(BenchInput {
            path: path.to_path_buf(),
            name,
            width,
        });
    }
    Ok(inputs)
}

/// Category for static mode: the configured one, else the first directory
/// under the bench root named after a profiled category.
fn bench_category(cfg: &PipelineConfig, input: &BenchInput, profiles: &ProfileRegistry) -> CliResult<String> {
    if let Some(c) = &cfg.category {
        return Ok(c.clone());
    }
    Path::new(&input.name)
        .components()
        .filter_map(|c| c.as_os_str().to_str())
        .find_map(|dir| {
            profiles
                .categories()
                .find(|(cat, _)| cat.eq_ignore_ascii_case(dir))
                .map(|(cat, _)| cat.to_string())
        })
        .ok_or_else(|| {
            CliError::usage(format!(
                "no profile category for {} (pass --category or use a category directory)",
                input.name
            ))
        })
}

pub fn bench(settings: &Settings, args: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let registry = CodecRegistry::with_adapters();
    let codecs = if args.codecs.is_empty() {
        vec!["lz77".to_string(), "huffman".to_string(), "xor_delta".to_string()]
    } else {
        args.codecs.clone()
    };
    let modes = if args.modes.is_empty() {
        vec!["dynamic".to_string()]
    } else {
        args.modes.clone()
    };
    let profiles = if modes.iter().any(|m| m == "static") {
        settings.profiles()?
    } else {
        ProfileRegistry::default()
    };
    let inputs = bench_inputs(args, settings.verbose > 0)?;
    if inputs.is_empty() {
        return Err(CliError::usage(format!("no datasets found under {}", args.input.display())));
    }
    let mut records_file = match &args.records {
        Some(p) => Some((p, fs::File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => None,
    };
    let mut records = Vec::new();
    if !args.json {
        writeln!(
            out,
            "{:<32} {:<9} {:<7} {:<28} {:>8} {:>7} {:>9} {:>9}",
            "dataset", "codec", "mode", "plan", "CR", "CRI", "CT MB/s", "DT MB/s"
        )
        .map_err(stdout_err)?;
    }
    for input in &inputs {
        let data = read_input(&input.path)?;
        let whole = data.len() / input.width.bytes() * input.width.bytes();
        for codec in &codecs {
            for mode in &modes {
                let run_args = PipelineArgs {
                    codec: Some(codec.clone()),
                    mode: Some(mode.clone()),
                    ..args.pipeline.clone()
                };
                let mut cfg = settings.pipeline(&run_args, input.width, &registry, whole)?;
                if cfg.mode == Mode::Static && run_args.plan.is_none() {
                    cfg.category = Some(bench_category(&cfg, input, &profiles)?);
                }
                let record = bench_one(settings, &registry, &profiles, &run_args, &cfg, input, &data)?;
                let line = serde_json::to_string(&record).expect("records serialize");
                if let Some((p, f)) = records_file.as_mut() {
                    writeln!(f, "{line}").map_err(|e| CliError::io(p, e))?;
                }
                if args.json {
                    writeln!(out, "{line}").map_err(stdout_err)?;
                } else {
                    write_bench_row(&record, out).map_err(stdout_err)?;
                }
                records.push(record);
            }
        }
    }
    if !args.json {
        write_bench_summary(&records, &codecs, &modes, out).map_err(stdout_err)?;
    }
    Ok(())
}

fn bench_one(
    settings: &Settings,
    registry: &CodecRegistry,
    profiles: &ProfileRegistry,
    args: &PipelineArgs,
    cfg: &PipelineConfig,
    input: &BenchInput,
    data: &[u8],
) -> CliResult<BenchRecord> {
    let width = input.width;
    let v = whole_words(data, width);
    // Planning counts toward compression time.
    let start = Instant::now();
    let plan = match &args.plan {
        Some(text) => explicit_plan(text, width, cfg.packing)?,
        None => plan_for(&v, cfg, profiles)?,
    };
    let c = compress_bytes(registry, data, width, cfg, &plan)?;
    let compress_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let back = decompress_bytes(registry, &c, cfg.worker_count)?;
    let decompress_secs = start.elapsed().as_secs_f64();
    if back != data {
        return Err(CliError::Data(format!(
            "{} did not round trip with {}",
            input.name,
            registry.name_of(cfg.codec).unwrap_or("?")
        )));
    }
    let identity = ClusteringPlan::identity(width).with_packing(Packing::SameValue);
    let baseline = compress_bytes(registry, data, width, cfg, &identity)?;
    if settings.verbose > 1 {
        eprintln!("{}: {} {} done", input.name, registry.name_of(cfg.codec).unwrap_or("?"), cfg.mode);
    }
    Ok(BenchRecord {
        schema: BENCH_SCHEMA.to_string(),
        dataset: input.name.clone(),
        width: width.bytes(),
        codec: registry.name_of(cfg.codec).unwrap_or("?").to_string(),
        mode: cfg.mode.to_string(),
        plan: plan.to_string(),
        block_size: cfg.block_size,
        workers: cfg.worker_count,
        report: report(data.len() as u64, c.total_len() as u64, Some(baseline.total_len() as u64))
            .with_timing(compress_secs, decompress_secs),
    })
}

fn mbps(x: Option<f64>) -> String {
    x.map_or("-".to_string(), |b| format!("{:.1}", b / 1e6))
}

fn write_bench_row(r: &BenchRecord, out: &mut dyn Write) -> io::Result<()> {
    writeln!(
        out,
        "{:<32} {:<9} {:<7} {:<28} {:>8.3} {:>7.3} {:>9} {:>9}",
        r.dataset,
        r.codec,
        r.mode,
        r.plan,
        r.report.cr,
        r.report.cri.unwrap_or(f64::NAN),
        mbps(r.report.ct),
        mbps(r.report.dt)
    )
}

fn write_bench_summary(records: &[BenchRecord], codecs: &[String], modes: &[String], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out)?;
    writeln!(out, "{:<9} {:<7} {:>8} {:>10} {:>10}", "codec", "mode", "datasets", "GMean CR", "GMean CRI")?;
    for codec in codecs {
        for mode in modes {
            let rows: Vec<&BenchRecord> = records
                .iter()
                .filter(|r| &r.codec == codec && &r.mode == mode)
                .collect();
            let cr: Vec<f64> = rows.iter().map(|r| r.report.cr).collect();
            let cri: Vec<f64> = rows.iter().filter_map(|r| r.report.cri).collect();
            writeln!(
                out,
                "{:<9} {:<7} {:>8} {:>10.3} {:>10.3}",
                codec,
                mode,
                rows.len(),
                geometric_mean(&cr).unwrap_or(f64::NAN),
                geometric_mean(&cri).unwrap_or(f64::NAN)
            )?;
        }
    }
    Ok(())
}
