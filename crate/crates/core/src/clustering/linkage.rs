use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{feature_distance, FeatureSet, FeatureVector};
use crate::typed::Partition;

/// One agglomeration step. Leaves carry ids `0..n`; the cluster formed at
/// step `s` gets id `n + s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeStep {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkageMatrix {
    pub n: usize,
    pub merge_steps: Vec<MergeStep>,
}

/// Pairwise feature distances.
pub fn distance_matrix(xs: &[FeatureVector], set: FeatureSet) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = feature_distance(&xs[i], &xs[j], set);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

pub(crate) fn euclidean_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = points[i]
                .iter()
                .zip(&points[j])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Single-linkage dendrogram over byte-group features.
pub fn linkage(xs: &[FeatureVector], set: FeatureSet) -> Result<LinkageMatrix> {
    linkage_from_distances(&distance_matrix(xs, set))
}

/// Single-linkage dendrogram over a symmetric distance matrix. Among equally
/// close cluster pairs the one with the lowest `(a, b)` ids merges first.
pub fn linkage_from_distances(d: &[Vec<f64>]) -> Result<LinkageMatrix> {
    let n = d.len();
    if n < 2 {
        return Err(Error::TooFewGroups(n));
    }
    // (id, members) of live clusters, kept sorted by id.
    let mut live: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut steps = Vec::with_capacity(n - 1);
    for s in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..live.len() {
            for y in x + 1..live.len() {
                let dist = live[x]
                    .1
                    .iter()
                    .flat_map(|&i| live[y].1.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| d[i][j])
                    .fold(f64::INFINITY, f64::min);
                if best.map_or(true, |(bd, _, _)| dist < bd) {
                    best = Some((dist, x, y));
                }
            }
        }
        let (distance, x, y) = best.expect("at least two live clusters");
        let (b_id, b_members) = live.remove(y);
        let (a_id, mut members) = live.remove(x);
        members.extend(b_members);
        steps.push(MergeStep {
            a: a_id,
            b: b_id,
            distance,
            size: members.len(),
        });
        live.push((n + s, members));
    }
    Ok(LinkageMatrix {
        n,
        merge_steps: steps,
    })
}

/// Partition with `k` clusters: the dendrogram minus its last `k - 1` merges.
pub fn cut(l: &LinkageMatrix, k: usize) -> Result<Partition> {
    let n = l.n;
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for step in &l.merge_steps[..n - k] {
        let mut merged = std::mem::take(&mut members[step.a]);
        merged.append(&mut members[step.b]);
        members.push(merged);
    }
    members.resize(2 * n - 1, Vec::new());
    let clusters = members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.into_iter().map(|i| i + 1).collect())
        .collect();
    Partition::new(n, clusters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(coords: &[f64]) -> Vec<Vec<f64>> {
        coords
            .iter()
            .map(|&a| coords.iter().map(|&b| (a - b).abs()).collect())
            .collect()
    }

    #[test]
    fn two_points_merge_once() {
        let l = linkage_from_distances(&line(&[0.0, 2.5])).unwrap();
        assert_eq!(l.merge_steps, vec![MergeStep { a: 0, b: 1, distance: 2.5, size: 2 }]);
    }

    #[test]
    fn collinear_chain() {
        let l = linkage_from_distances(&line(&[0.0, 1.0, 10.0, 11.0])).unwrap();
        let d: Vec<f64> = l.merge_steps.iter().map(|s| s.distance).collect();
        assert_eq!(d, vec![1.0, 1.0, 9.0]);
        assert_eq!((l.merge_steps[0].a, l.merge_steps[0].b), (0, 1));
        assert_eq!((l.merge_steps[1].a, l.merge_steps[1].b), (2, 3));
        assert_eq!((l.merge_steps[2].a, l.merge_steps[2].b), (4, 5));
        assert_eq!(cut(&l, 2).unwrap().to_string(), "{1,2}|{3,4}");
        assert_eq!(cut(&l, 1).unwrap().to_string(), "{1,2,3,4}");
        assert_eq!(cut(&l, 4).unwrap().to_string(), "{1}|{2}|{3}|{4}");
        assert_eq!(cut(&l, 3).unwrap().to_string(), "{1,2}|{3}|{4}");
    }

    #[test]
    fn identical_points_merge_at_zero() {
        let l = linkage_from_distances(&line(&[3.0, 3.0, 3.0])).unwrap();
        assert!(l.merge_steps.iter().all(|s| s.distance == 0.0));
        assert_eq!(l.merge_steps.len(), 2);
    }

    #[test]
    fn too_few_and_bad_k() {
        assert!(matches!(linkage_from_distances(&line(&[1.0])), Err(Error::TooFewGroups(1))));
        let l = linkage_from_distances(&line(&[0.0, 1.0])).unwrap();
        assert!(matches!(cut(&l, 0), Err(Error::KOutOfRange { k: 0, n: 2 })));
        assert!(matches!(cut(&l, 3), Err(Error::KOutOfRange { k: 3, n: 2 })));
    }
}
