//! Packing a typed block into one byte stream per cluster, and back.

use crate::error::{Error, Result};
use crate::typed::{ClusteringPlan, Packing, TypedView};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBlock {
    pub plan: ClusteringPlan,
    pub streams: Vec<Vec<u8>>,
    pub value_count: usize,
}

impl PackedBlock {
    pub fn total_len(&self) -> usize {
        self.streams.iter().map(Vec::len).sum()
    }

    /// Streams concatenated in plan order.
    pub fn concat(&self) -> Vec<u8> {
        self.streams.concat()
    }
}

/// Gathers the bytes of each cluster of `plan` into its own stream.
pub fn pack(v: &TypedView<'_>, plan: &ClusteringPlan) -> Result<PackedBlock> {
    if plan.width() != v.width() {
        return Err(Error::WidthMismatch {
            expected: plan.width().bytes(),
            actual: v.width().bytes(),
        });
    }
    let streams = plan
        .clusters()
        .iter()
        .map(|c| pack_cluster(v.as_bytes(), v.width().bytes(), c, plan.packing()))
        .collect();
    Ok(PackedBlock {
        plan: plan.clone(),
        streams,
        value_count: v.value_count(),
    })
}

/// Packs a single cluster of byte positions.
pub fn pack_cluster(data: &[u8], n: usize, cluster: &[usize], packing: Packing) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() / n * cluster.len());
    pack_cluster_into(data, n, cluster, packing, &mut out);
    out
}

/// Appends the packed cluster to `out`.
pub fn pack_cluster_into(data: &[u8], n: usize, cluster: &[usize], packing: Packing, out: &mut Vec<u8>) {
    match packing {
        Packing::SameByte => {
            for &p in cluster {
                out.extend(data.iter().skip(p - 1).step_by(n));
            }
        }
        Packing::SameValue => {
            for word in data.chunks_exact(n) {
                out.extend(cluster.iter().map(|&p| word[p - 1]));
            }
        }
    }
}

/// Scatters the streams of `p` back into word order.
pub fn unpack(p: &PackedBlock) -> Result<TypedView<'static>> {
    let n = p.plan.width().bytes();
    let clusters = p.plan.clusters();
    if p.streams.len() != clusters.len() {
        return Err(Error::InconsistentLengths(format!(
            "{} streams for {} clusters",
            p.streams.len(),
            clusters.len()
        )));
    }
    let mut out = vec![0u8; p.value_count * n];
    for (stream, cluster) in p.streams.iter().zip(clusters) {
        unpack_cluster(&mut out, n, cluster, p.plan.packing(), stream)?;
    }
    TypedView::owned(out, p.plan.width())
}

/// Writes one cluster's stream into `out`, which holds whole words.
pub fn unpack_cluster(out: &mut [u8], n: usize, cluster: &[usize], packing: Packing, stream: &[u8]) -> Result<()> {
    let count = out.len() / n;
    if stream.len() != count * cluster.len() {
        return Err(Error::InconsistentLengths(format!(
            "stream of {} bytes for {} values x {} positions",
            stream.len(),
            count,
            cluster.len()
        )));
    }
    match packing {
        Packing::SameByte => {
            for (plane, &p) in stream.chunks_exact(count.max(1)).zip(cluster) {
                for (dst, &b) in out.iter_mut().skip(p - 1).step_by(n).zip(plane) {
                    *dst = b;
                }
            }
        }
        Packing::SameValue => {
            for (word, bytes) in out.chunks_exact_mut(n).zip(stream.chunks_exact(cluster.len())) {
                for (&p, &b) in cluster.iter().zip(bytes) {
                    word[p - 1] = b;
                }
            }
        }
    }
    Ok(())
}
