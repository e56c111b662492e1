//! Normalized-Laplacian spectral clustering.
//!
//! Affinity graph -> `L = I - D^{-1/2} W D^{-1/2}` -> the `k` eigenvectors
//! with smallest eigenvalues -> row-normalized embedding -> seeded k-means
//! with k-means++ initialization. A disconnected graph contributes one
//! null-space vector per component, so components separate on their own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::vecops;
use crate::wals::{median_pairwise_distance, Bandwidth};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Affinity {
    /// Unweighted k-nearest-neighbour graph.
    Knn { neighbors: usize, mutual: bool },
    /// Dense Gaussian affinity `exp(-d^2 / (2 sigma^2))`.
    Rbf { bandwidth: Bandwidth },
}

impl Default for Affinity {
    fn default() -> Self {
        Affinity::Knn {
            neighbors: 10,
            mutual: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub affinity: Affinity,
    /// Number of k-means restarts; the lowest-inertia run wins.
    pub n_init: usize,
    pub max_iter: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            affinity: Affinity::default(),
            n_init: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster id per row, numbered by first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
    pub affinity: Affinity,
    pub seed: u64,
    /// Smallest Laplacian eigenvalues, ascending, for eigengap inspection.
    pub eigenvalues: Vec<f64>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster_id: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster_id)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

const EIGENGAP_REPORT: usize = 20;

fn pairwise_distances(m: &EmbeddingMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = vecops::norm(&vecops::sub(m.row(i), m.row(j)));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Symmetric affinity matrix with zero diagonal (row-major `n x n`).
pub fn affinity_matrix(matrix: &EmbeddingMatrix, affinity: Affinity) -> Result<Vec<f64>> {
    let n = matrix.rows();
    let dist = pairwise_distances(matrix);
    let mut w = vec![0.0; n * n];
    match affinity {
        Affinity::Knn { neighbors, mutual } => {
            if neighbors == 0 {
                return Err(Error::InvalidArgument("knn neighbors must be >= 1".into()));
            }
            let k = neighbors.min(n.saturating_sub(1));
            let mut is_neighbor = vec![false; n * n];
            for i in 0..n {
                let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                order.sort_by(|&a, &b| dist[i * n + a].total_cmp(&dist[i * n + b]).then(a.cmp(&b)));
                for &j in order.iter().take(k) {
                    is_neighbor[i * n + j] = true;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (is_neighbor[i * n + j], is_neighbor[j * n + i]);
                    if (mutual && a && b) || (!mutual && (a || b)) {
                        w[i * n + j] = 1.0;
                    }
                }
            }
        }
        Affinity::Rbf { bandwidth } => {
            let sigma = match bandwidth {
                Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => s,
                Bandwidth::Fixed(s) => {
                    return Err(Error::InvalidArgument(format!("rbf bandwidth {s} must be > 0")))
                }
                Bandwidth::Median => median_pairwise_distance(matrix)?,
            };
            if sigma.is_nan() || sigma <= 0.0 {
                return Err(Error::Degenerate("median pairwise distance is zero".into()));
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let d = dist[i * n + j];
                        w[i * n + j] = (-d * d / (2.0 * sigma * sigma)).exp();
                    }
                }
            }
        }
    }
    Ok(w)
}

/// `I - D^{-1/2} W D^{-1/2}`; isolated vertices get a unit self-loop so
/// each forms its own component.
pub fn normalized_laplacian(w: &[f64], n: usize) -> Vec<f64> {
    let mut w = w.to_vec();
    for i in 0..n {
        if w[i * n..(i + 1) * n].iter().all(|&x| x == 0.0) {
            w[i * n + i] = 1.0;
        }
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / w[i * n..(i + 1) * n].iter().sum::<f64>().sqrt())
        .collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            l[i * n + j] = id - inv_sqrt[i] * w[i * n + j] * inv_sqrt[j];
        }
    }
    l
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // All remaining points coincide with a centroid.
            rng.random_range(0..n)
        };
        centroids.push(points[next].clone());
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(p, centroids.last().unwrap()));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> (Vec<usize>, f64) {
    let dim = points[0].len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for (c, (sum, &count)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            if count > 0 {
                *c = sum.iter().map(|s| s / count as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    (labels, inertia)
}

/// Renumbers labels in order of first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Seeded k-means over `points`; deterministic for a given seed.
pub fn kmeans(points: &[Vec<f64>], k: usize, n_init: usize, max_iter: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..n_init.max(1) {
        let init = kmeans_pp_init(points, k, &mut rng);
        let (labels, inertia) = lloyd(points, init, max_iter);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    canonical(&best.expect("at least one k-means run").0)
}

pub fn spectral_cluster(
    matrix: &EmbeddingMatrix,
    k: usize,
    params: &ClusterParams,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = matrix.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} must lie in 1..={n}"
        )));
    }
    let w = affinity_matrix(matrix, params.affinity)?;
    let lap = normalized_laplacian(&w, n);
    let eig = linalg::symmetric_eigen(&lap, n)?;
    // `symmetric_eigen` sorts descending; the smallest sit at the end.
    let ascending: Vec<usize> = (0..n).rev().collect();
    let eigenvalues = ascending
        .iter()
        .take(EIGENGAP_REPORT.min(n))
        .map(|&i| eig.values[i])
        .collect();

    let labels = if k == 1 {
        vec![0; n]
    } else {
        let basis: Vec<&Vec<f64>> = ascending.iter().take(k).map(|&i| &eig.vectors[i]).collect();
        let points: Vec<Vec<f64>> = (0..n)
            .map(|r| {
                let row: Vec<f64> = basis.iter().map(|v| v[r]).collect();
                vecops::unit(&row).unwrap_or(row)
            })
            .collect();
        kmeans(&points, k, params.n_init, params.max_iter, seed)
    };
    Ok(ClusterAssignment {
        labels,
        k,
        affinity: params.affinity,
        seed,
        eigenvalues,
    })
}

/// Arithmetic mean of the rows assigned to `cluster_id`.
pub fn cluster_centroid(
    matrix: &EmbeddingMatrix,
    assignment: &ClusterAssignment,
    cluster_id: usize,
) -> Result<Vec<f64>> {
    if assignment.labels.len() != matrix.rows() {
        return Err(Error::dim("cluster labels", matrix.rows(), assignment.labels.len()));
    }
    let members = assignment.members(cluster_id);
    if members.is_empty() {
        return Err(Error::Degenerate(format!("cluster {cluster_id} is empty")));
    }
    let mut mean = vec![0.0; matrix.dims()];
    for &i in &members {
        mean.iter_mut().zip(matrix.row(i)).for_each(|(m, x)| *m += x);
    }
    let count = members.len() as f64;
    mean.iter_mut().for_each(|m| *m /= count);
    Ok(mean)
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len();
    let comb2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table = std::collections::HashMap::<(usize, usize), usize>::new();
    let mut rows = std::collections::HashMap::<usize, usize>::new();
    let mut cols = std::collections::HashMap::<usize, usize>::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| comb2(c)).sum();
    let total = comb2(n);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
