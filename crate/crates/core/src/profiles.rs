//! Static clustering profiles keyed by application category and word width.
//!
//! Text format, one profile per line:
//!
//! ```text
//! tdt-profiles 1
//! # category  width  plan             metric
//! TS          4      {1,2}|{3}|{4}    davies_bouldin
//! ```
//!
//! The first non-blank, non-comment line must be the version line. Fields
//! are whitespace separated; `#` starts a comment. The metric column is
//! optional and defaults to the width's default pairing. Categories are
//! case-insensitive and stored upper-case.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::clustering::{default_pairing, select_clustering, ScoreMetric};
use crate::error::{Error, Result};
use crate::features::{extract_all, FeatureConfig};
use crate::pipeline::{sample_blocks, SAMPLE_UNIT};
use crate::typed::{ClusteringPlan, FloatWidth, Packing, Partition, TypedView};

pub const FORMAT_HEADER: &str = "tdt-profiles";
pub const FORMAT_VERSION: u32 = 1;

/// The registry shipped with the library.
pub const DEFAULT_PROFILES: &str = include_str!("../profiles/default.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct StaticProfile {
    pub category: String,
    pub width: FloatWidth,
    pub plan: ClusteringPlan,
    pub metric: ScoreMetric,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileRegistry {
    profiles: BTreeMap<(String, u8), StaticProfile>,
}

impl ProfileRegistry {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_PROFILES).expect("bundled profile file is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read profile file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reg = ProfileRegistry::default();
        let mut seen_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |reason: String| Error::ProfileSyntax { line: line_no, reason };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !seen_header {
                match fields.as_slice() {
                    [FORMAT_HEADER, v] if v.parse() == Ok(FORMAT_VERSION) => {
                        seen_header = true;
                        continue;
                    }
                    [FORMAT_HEADER, v] => return Err(syntax(format!("unsupported version {v}"))),
                    _ => return Err(syntax(format!("expected `{FORMAT_HEADER} {FORMAT_VERSION}`"))),
                }
            }
            let (category, width, plan, metric) = match fields.as_slice() {
                [c, w, p] => (*c, *w, *p, None),
                [c, w, p, m] => (*c, *w, *p, Some(*m)),
                _ => return Err(syntax(format!("expected 3 or 4 fields, got {}", fields.len()))),
            };
            let width = width
                .parse::<usize>()
                .map_err(|e| syntax(format!("width: {e}")))
                .and_then(|w| FloatWidth::new(w).map_err(|e| syntax(e.to_string())))?;
            let partition: Partition = plan.parse().map_err(|e: Error| syntax(e.to_string()))?;
            let plan = ClusteringPlan::new(width, partition, Packing::SameByte).map_err(|e| syntax(e.to_string()))?;
            let metric = match metric {
                Some(m) => ScoreMetric::new(m.parse().map_err(|e: Error| syntax(e.to_string()))?),
                None => default_pairing(width).1,
            };
            let category = category.to_ascii_uppercase();
            let key = (category.clone(), width.bytes() as u8);
            if reg.profiles.contains_key(&key) {
                return Err(syntax(format!("duplicate profile for {category} width {width}")));
            }
            reg.profiles.insert(key, StaticProfile { category, width, plan, metric });
        }
        if !seen_header {
            return Err(Error::ProfileSyntax {
                line: 0,
                reason: "empty profile file".into(),
            });
        }
        Ok(reg)
    }

    pub fn get(&self, category: &str, width: FloatWidth) -> Result<&StaticProfile> {
        self.profiles
            .get(&(category.to_ascii_uppercase(), width.bytes() as u8))
            .ok_or_else(|| Error::MissingProfile {
                category: category.to_string(),
                width: width.bytes(),
            })
    }

    pub fn insert(&mut self, profile: StaticProfile) {
        let key = (profile.category.to_ascii_uppercase(), profile.width.bytes() as u8);
        self.profiles.insert(key, profile);
    }

    pub fn categories(&self) -> impl Iterator<Item = (&str, FloatWidth)> {
        self.profiles.values().map(|p| (p.category.as_str(), p.width))
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Profile plan for a category: a strided `fraction` sample of every
/// dataset is merged into one compound dataset, which is then clustered
/// with the width's default pairing.
pub fn compound_plan(datasets: &[TypedView<'_>], fraction: f64) -> Result<StaticProfile> {
    let width = match datasets.first() {
        Some(v) => v.width(),
        None => return Err(Error::EmptyInput),
    };
    let mut bytes = Vec::new();
    for v in datasets {
        if v.width() != width {
            return Err(Error::WidthMismatch {
                expected: width.bytes(),
                actual: v.width().bytes(),
            });
        }
        bytes.extend_from_slice(sample_blocks(v, SAMPLE_UNIT, fraction).as_bytes());
    }
    let compound = TypedView::owned(bytes, width)?;
    if compound.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (set, metric) = default_pairing(width);
    let cfg = FeatureConfig {
        feature_set: set,
        ..Default::default()
    };
    let plan = select_clustering(&extract_all(&compound, &cfg)?, set, &metric)?;
    Ok(StaticProfile {
        category: String::new(),
        width,
        plan,
        metric,
    })
}

impl fmt::Display for ProfileRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{FORMAT_HEADER} {FORMAT_VERSION}")?;
        for p in self.profiles.values() {
            writeln!(f, "{:<4} {} {:<30} {}", p.category, p.width, p.plan.to_string(), p.metric.kind)?;
        }
        Ok(())
    }
}
