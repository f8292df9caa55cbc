//! Typed views over raw byte buffers and the clustering vocabulary.
//!
//! Byte positions are 1-based and follow memory order: position 1 is the
//! first stored byte of every word, whatever the platform endianness. Nothing
//! in this crate interprets IEEE 754 fields.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bytes per word of the typed dataset: 2, 4 or 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct FloatWidth(u8);

impl FloatWidth {
    pub const HALF: FloatWidth = FloatWidth(2);
    pub const SINGLE: FloatWidth = FloatWidth(4);
    pub const DOUBLE: FloatWidth = FloatWidth(8);

    pub const ALL: [FloatWidth; 3] = [Self::HALF, Self::SINGLE, Self::DOUBLE];

    pub fn new(bytes_per_word: usize) -> Result<Self> {
        match bytes_per_word {
            2 | 4 | 8 => Ok(FloatWidth(bytes_per_word as u8)),
            other => Err(Error::InvalidWidth(other)),
        }
    }

    #[inline]
    pub fn bytes(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for FloatWidth {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        FloatWidth::new(v as usize)
    }
}

impl From<FloatWidth> for u8 {
    fn from(w: FloatWidth) -> u8 {
        w.0
    }
}

impl fmt::Display for FloatWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A byte buffer interpreted as a sequence of fixed-width words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedView<'a> {
    data: Cow<'a, [u8]>,
    width: FloatWidth,
}

/// Borrow `data` as a typed view. Fails unless the length is a whole number
/// of words.
pub fn view(data: &[u8], width: FloatWidth) -> Result<TypedView<'_>> {
    TypedView::new(Cow::Borrowed(data), width)
}

impl<'a> TypedView<'a> {
    pub fn new(data: Cow<'a, [u8]>, width: FloatWidth) -> Result<Self> {
        if data.len() % width.bytes() != 0 {
            return Err(Error::LengthNotMultipleOfWidth {
                len: data.len(),
                width: width.bytes(),
            });
        }
        Ok(TypedView { data, width })
    }

    pub fn owned(data: Vec<u8>, width: FloatWidth) -> Result<TypedView<'static>> {
        TypedView::new(Cow::Owned(data), width)
    }

    #[inline]
    pub fn width(&self) -> FloatWidth {
        self.width
    }

    #[inline]
    pub fn value_count(&self) -> usize {
        self.data.len() / self.width.bytes()
    }

    #[inline]
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data.into_owned()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Sub-view over values `start..end`.
    pub fn slice_values(&self, start: usize, end: usize) -> TypedView<'_> {
        let w = self.width.bytes();
        TypedView {
            data: Cow::Borrowed(&self.data[start * w..end * w]),
            width: self.width,
        }
    }

    /// The bytes at 1-based `position` of every word.
    pub fn extract_group(&self, position: usize) -> Result<ByteGroup> {
        let n = self.width.bytes();
        if position == 0 || position > n {
            return Err(Error::PositionOutOfRange { position, width: n });
        }
        let bytes = self
            .data
            .iter()
            .skip(position - 1)
            .step_by(n)
            .copied()
            .collect();
        Ok(ByteGroup { position, bytes })
    }

    /// All `n` byte groups in position order.
    pub fn groups(&self) -> Vec<ByteGroup> {
        (1..=self.width.bytes())
            .map(|p| self.extract_group(p).expect("position in range"))
            .collect()
    }
}

/// The stream of bytes found at one position of every word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteGroup {
    pub position: usize,
    pub bytes: Vec<u8>,
}

/// Re-interleave byte groups (given in position order) into words.
pub fn interleave(groups: &[ByteGroup]) -> Vec<u8> {
    let n = groups.len();
    let count = groups.first().map_or(0, |g| g.bytes.len());
    let mut out = vec![0u8; n * count];
    for (p, g) in groups.iter().enumerate() {
        for (j, &b) in g.bytes.iter().enumerate() {
            out[j * n + p] = b;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Packing {
    /// Byte-plane order: all values' bytes at one position, then the next.
    #[default]
    SameByte,
    /// Each value's cluster bytes together, value after value.
    SameValue,
}

impl Packing {
    pub fn code(self) -> u8 {
        match self {
            Packing::SameByte => 0,
            Packing::SameValue => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Packing::SameByte),
            1 => Some(Packing::SameValue),
            _ => None,
        }
    }
}

impl FromStr for Packing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same_byte" | "same-byte" => Ok(Packing::SameByte),
            "same_value" | "same-value" => Ok(Packing::SameValue),
            _ => Err(Error::InvalidConfig(format!("unknown packing {s:?}"))),
        }
    }
}

impl fmt::Display for Packing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Packing::SameByte => "same_byte",
            Packing::SameValue => "same_value",
        })
    }
}

/// A partition of positions `1..=n` in canonical order: clusters sorted by
/// their smallest position, positions ascending within each cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    clusters: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes `clusters` and checks that they partition `1..=n`.
    pub fn new(n: usize, clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n + 1];
        let mut clusters: Vec<Vec<usize>> = clusters
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        for c in &clusters {
            if c.is_empty() {
                return Err(Error::InvalidPlan("empty cluster".into()));
            }
            for &p in c {
                if p == 0 || p > n {
                    return Err(Error::InvalidPlan(format!("position {p} outside 1..={n}")));
                }
                if std::mem::replace(&mut seen[p], true) {
                    return Err(Error::InvalidPlan(format!("position {p} appears twice")));
                }
            }
        }
        if let Some(p) = (1..=n).find(|&p| !seen[p]) {
            return Err(Error::InvalidPlan(format!("position {p} is not assigned")));
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        Ok(Partition { n, clusters })
    }

    /// Builds a partition from a 0-based cluster label per position. Labels
    /// need not be canonical.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut clusters = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            clusters[l].push(i + 1);
        }
        clusters.retain(|c| !c.is_empty());
        Partition::new(labels.len(), clusters)
    }

    pub fn single(n: usize) -> Self {
        Partition {
            n,
            clusters: vec![(1..=n).collect()],
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            n,
            clusters: (1..=n).map(|p| vec![p]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// Canonical 0-based cluster index for each position `1..=n`.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (j, c) in self.clusters.iter().enumerate() {
            for &p in c {
                labels[p - 1] = j;
            }
        }
        labels
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.clusters.iter().enumerate() {
            if j > 0 {
                f.write_str("|")?;
            }
            f.write_str("{")?;
            for (i, p) in c.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses the `{1,2}|{3}|{4}` notation.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPlan(format!("cannot parse {s:?}"));
        let mut clusters = Vec::new();
        for part in s.trim().split('|') {
            let inner = part
                .trim()
                .strip_prefix('{')
                .and_then(|p| p.strip_suffix('}'))
                .ok_or_else(bad)?;
            let cluster = inner
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            clusters.push(cluster);
        }
        let n = clusters.iter().map(Vec::len).sum();
        Partition::new(n, clusters)
    }
}

/// The complete recipe for the transform: which byte positions travel
/// together, and how the bytes of a cluster are laid out.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusteringPlan {
    width: FloatWidth,
    partition: Partition,
    packing: Packing,
}

impl ClusteringPlan {
    pub fn new(width: FloatWidth, partition: Partition, packing: Packing) -> Result<Self> {
        if partition.n() != width.bytes() {
            return Err(Error::WidthMismatch {
                expected: width.bytes(),
                actual: partition.n(),
            });
        }
        Ok(ClusteringPlan {
            width,
            partition,
            packing,
        })
    }

    /// Whole-word clustering with same-value packing: the identity layout.
    pub fn identity(width: FloatWidth) -> Self {
        ClusteringPlan {
            width,
            partition: Partition::single(width.bytes()),
            packing: Packing::SameValue,
        }
    }

    pub fn singletons(width: FloatWidth) -> Self {
        ClusteringPlan {
            width,
            partition: Partition::singletons(width.bytes()),
            packing: Packing::SameByte,
        }
    }

    pub fn width(&self) -> FloatWidth {
        self.width
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        self.partition.clusters()
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn packing(&self) -> Packing {
        self.packing
    }

    pub fn with_packing(mut self, packing: Packing) -> Self {
        self.packing = packing;
        self
    }

    /// Serialized form used by the container: cluster count followed by one
    /// canonical cluster index per position.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.width.bytes());
        out.push(self.k() as u8);
        out.extend(self.partition.labels().into_iter().map(|l| l as u8));
        out
    }

    /// Inverse of [`encode`](Self::encode). Rejects non-canonical labelings so
    /// that every partition has exactly one encoding.
    pub fn decode(width: FloatWidth, packing: Packing, bytes: &[u8]) -> Result<Self> {
        let n = width.bytes();
        if bytes.len() != n + 1 {
            return Err(Error::InvalidPlan(format!(
                "expected {} plan bytes, got {}",
                n + 1,
                bytes.len()
            )));
        }
        let k = bytes[0] as usize;
        let labels: Vec<usize> = bytes[1..].iter().map(|&b| b as usize).collect();
        // Canonical labels appear in first-occurrence order 0, 1, 2, ...
        let mut next = 0;
        for &l in &labels {
            if l > next {
                return Err(Error::InvalidPlan("non-canonical cluster labels".into()));
            }
            if l == next {
                next += 1;
            }
        }
        if next != k || k == 0 {
            return Err(Error::InvalidPlan(format!(
                "cluster count {k} disagrees with labels"
            )));
        }
        ClusteringPlan::new(width, Partition::from_labels(&labels)?, packing)
    }
}

impl fmt::Display for ClusteringPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.partition.fmt(f)
    }
}
