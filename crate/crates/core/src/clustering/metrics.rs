//! Internal cluster-validation indices. Every function returns a score where
//! larger is better; undefined configurations yield `f64::NEG_INFINITY` so
//! an argmax skips them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linkage::{cut, euclidean_matrix, linkage_from_distances};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn cluster_count(labels: &[usize]) -> usize {
    labels.iter().copied().max().map_or(0, |m| m + 1)
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        sizes[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&sizes) {
        for v in s.iter_mut() {
            *v /= n as f64;
        }
    }
    (sums, sizes)
}

/// Mean silhouette coefficient. Defined for `2 <= k <= n - 1`; points in
/// singleton clusters score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = cluster_count(labels);
    if k < 2 || k >= n {
        return f64::NEG_INFINITY;
    }
    let d = euclidean_matrix(points);
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += d[i][j];
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

/// Davies-Bouldin index, negated. Undefined for a single cluster and for
/// all-singleton partitions. Coincident centroids contribute a zero ratio.
pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = cluster_count(labels);
    if k < 2 || k >= n {
        return f64::NEG_INFINITY;
    }
    let (cent, sizes) = centroids(points, labels, k);
    let mut scatter = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        scatter[l] += dist(p, &cent[l]);
    }
    for (s, &m) in scatter.iter_mut().zip(&sizes) {
        *s /= m as f64;
    }
    let mut db = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let m = dist(&cent[i], &cent[j]);
            if m > 0.0 {
                worst = worst.max((scatter[i] + scatter[j]) / m);
            }
        }
        db += worst;
    }
    -(db / k as f64)
}

/// Calinski-Harabasz variance ratio. Undefined unless `2 <= k <= n - 1`;
/// zero within-cluster dispersion with positive separation scores `+inf`.
pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = cluster_count(labels);
    if k < 2 || k >= n {
        return f64::NEG_INFINITY;
    }
    let (cent, sizes) = centroids(points, labels, k);
    let all = vec![0usize; n];
    let (global, _) = centroids(points, &all, 1);
    let between: f64 = cent
        .iter()
        .zip(&sizes)
        .map(|(c, &m)| m as f64 * sq_dist(c, &global[0]))
        .sum();
    let within: f64 = points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &cent[l]))
        .sum();
    if within == 0.0 {
        return if between > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// Pooled within-cluster sum of squares around the centroids.
pub fn within_dispersion(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = cluster_count(labels);
    let (cent, _) = centroids(points, labels, k);
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &cent[l]))
        .sum()
}

/// Reference data sets drawn uniformly over the bounding box of `points`.
pub fn reference_draws(points: &[Vec<f64>], draws: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let dim = points.first().map_or(0, Vec::len);
    let lo: Vec<f64> = (0..dim)
        .map(|c| points.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|c| points.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| {
            (0..points.len())
                .map(|_| {
                    lo.iter()
                        .zip(&hi)
                        .map(|(&l, &h)| l + rng.random::<f64>() * (h - l))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Gap statistic: mean log dispersion of single-linkage clusterings of the
/// reference draws minus the log dispersion of `labels`. Undefined at
/// `k = n`, where every dispersion vanishes.
pub fn gap_statistic(points: &[Vec<f64>], labels: &[usize], draws: usize, seed: u64) -> f64 {
    let n = points.len();
    let k = cluster_count(labels);
    if k == 0 || k >= n || draws == 0 {
        return f64::NEG_INFINITY;
    }
    let refs = reference_draws(points, draws, seed);
    let mut log_ref = 0.0;
    for r in &refs {
        let l = linkage_from_distances(&euclidean_matrix(r)).expect("n >= 2");
        let ref_labels = cut(&l, k).expect("k in range").labels();
        log_ref += within_dispersion(r, &ref_labels).ln();
    }
    let gap = log_ref / draws as f64 - within_dispersion(points, labels).ln();
    if gap.is_nan() {
        f64::NEG_INFINITY
    } else {
        gap
    }
}
