//! Exact k-nearest-neighbor graphs under Euclidean, Mahalanobis and geodesic
//! metrics, plus the all-pairs shortest path kernel behind the geodesic one.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::statistics::{euclidean_squared, CovarianceModel};

pub const DEFAULT_K: usize = 20;
/// Base graph for geodesic neighborhoods. Kept below `DEFAULT_K`, see [`knn_geodesic`].
pub const DEFAULT_K_BASE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTag {
    Euclidean,
    Mahalanobis,
    Geodesic,
}

impl MetricTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricTag::Euclidean => "euclidean",
            MetricTag::Mahalanobis => "mahalanobis",
            MetricTag::Geodesic => "geodesic",
        }
    }
}

impl std::fmt::Display for MetricTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(MetricTag::Euclidean),
            "mahalanobis" => Ok(MetricTag::Mahalanobis),
            "geodesic" => Ok(MetricTag::Geodesic),
            other => Err(Error::invalid(format!("unknown metric '{other}'"))),
        }
    }
}

/// Point-to-point metric for direct k-NN search.
#[derive(Debug, Clone, Copy)]
pub enum Metric<'a> {
    Euclidean,
    Mahalanobis(&'a CovarianceModel),
}

impl Metric<'_> {
    pub fn tag(&self) -> MetricTag {
        match self {
            Metric::Euclidean => MetricTag::Euclidean,
            Metric::Mahalanobis(_) => MetricTag::Mahalanobis,
        }
    }
}

/// Per-point neighbor lists, nearest first, without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub neighbors: Vec<Vec<usize>>,
    /// Generating-metric distance for each entry of `neighbors`. Squared for
    /// Euclidean and Mahalanobis graphs, path length for geodesic ones.
    pub distances: Vec<Vec<f64>>,
    pub metric: MetricTag,
    pub k: usize,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// One line per point: `i: j1 j2 ... jk`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for j in list {
                let _ = write!(out, " {j}");
            }
            out.push('\n');
        }
        out
    }

    /// Graph with points relabeled: point `i` of the result is point `order[i]` here.
    pub fn permuted(&self, order: &[usize]) -> NeighborGraph {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        NeighborGraph {
            neighbors: order
                .iter()
                .map(|&old| self.neighbors[old].iter().map(|&j| inverse[j]).collect())
                .collect(),
            distances: order.iter().map(|&old| self.distances[old].clone()).collect(),
            metric: self.metric,
            k: self.k,
        }
    }

    /// Per-point fraction of neighbors carrying the same label as the point.
    pub fn same_label_fractions(&self, labels: &[usize]) -> Vec<f64> {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(i, list)| list.iter().filter(|&&j| labels[j] == labels[i]).count() as f64 / list.len() as f64)
            .collect()
    }

    /// Per-point size of the neighbor-set intersection with `other`, divided by `k`.
    pub fn overlap_fractions(&self, other: &NeighborGraph) -> Vec<f64> {
        self.neighbors
            .iter()
            .zip(&other.neighbors)
            .map(|(a, b)| a.iter().filter(|j| b.contains(j)).count() as f64 / self.k as f64)
            .collect()
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` smallest candidates under (distance, index) ordering, sorted.
fn k_smallest(mut cand: Vec<(f64, usize)>, k: usize) -> (Vec<usize>, Vec<f64>) {
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand.into_iter().map(|(d, j)| (j, d)).unzip()
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k < {n}, got {k}")));
    }
    Ok(())
}

/// Exact brute-force k-NN graph. Ties are broken towards the lower index.
pub fn knn(cloud: &PointCloud, k: usize, metric: Metric<'_>) -> Result<NeighborGraph> {
    let n = cloud.len();
    check_k(k, n)?;
    let pts = cloud.points();
    let (neighbors, distances) = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = &pts[i];
            let cand: Vec<(f64, usize)> = pts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| {
                    let d = match metric {
                        Metric::Euclidean => euclidean_squared(p, q),
                        Metric::Mahalanobis(model) => model.squared_distance(p, q),
                    };
                    (d, j)
                })
                .collect();
            k_smallest(cand, k)
        })
        .unzip();
    Ok(NeighborGraph {
        neighbors,
        distances,
        metric: metric.tag(),
        k,
    })
}

/// Dense square matrix of non-negative path lengths; `f64::INFINITY` marks
/// unreachable pairs or missing edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// `n x n` matrix with zero diagonal and every other entry infinite.
    pub fn unconnected(n: usize) -> Self {
        let mut data = vec![f64::INFINITY; n * n];
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        Self { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("distance matrix must be square"));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Lowers both `(i, j)` and `(j, i)` to `w` if `w` is shorter.
    pub fn add_undirected_edge(&mut self, i: usize, j: usize, w: f64) {
        if w < self.get(i, j) {
            self.set(i, j, w);
        }
        if w < self.get(j, i) {
            self.set(j, i, w);
        }
    }

    fn validate_adjacency(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if v.is_nan() || v < 0.0 {
                    return Err(Error::invalid(format!("entry ({i}, {j}) = {v} is not a non-negative length")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::invalid(format!("diagonal entry {i} is {v}, expected 0")));
                }
            }
        }
        Ok(())
    }
}

/// Rows per rayon task below which a pivot step runs sequentially.
const PARALLEL_ROWS: usize = 128;

/// All-pairs shortest paths. For every pivot `m` the whole matrix is relaxed
/// row-wise with `row_i = min(row_i, d(i, m) + row_m)`; rows are independent
/// within a pivot and run in parallel, pivots are sequential.
pub fn floyd_warshall(adjacency: &DistanceMatrix) -> Result<DistanceMatrix> {
    adjacency.validate_adjacency()?;
    let n = adjacency.n;
    let mut dist = adjacency.clone();
    if n == 0 {
        return Ok(dist);
    }
    let mut pivot_row = vec![0.0; n];
    for m in 0..n {
        pivot_row.copy_from_slice(dist.row(m));
        let relax = |row: &mut [f64]| {
            let through = row[m];
            if through.is_infinite() {
                return;
            }
            for (d, &p) in row.iter_mut().zip(&pivot_row) {
                let cand = through + p;
                if cand < *d {
                    *d = cand;
                }
            }
        };
        if n >= PARALLEL_ROWS {
            dist.data.par_chunks_mut(n).for_each(relax);
        } else {
            dist.data.chunks_mut(n).for_each(relax);
        }
    }
    Ok(dist)
}

/// Symmetrized Euclidean k-NN graph with edge weights equal to Euclidean lengths.
pub fn knn_adjacency(cloud: &PointCloud, k_base: usize) -> Result<DistanceMatrix> {
    let base = knn(cloud, k_base, Metric::Euclidean)?;
    let mut adj = DistanceMatrix::unconnected(cloud.len());
    for (i, (list, dists)) in base.neighbors.iter().zip(&base.distances).enumerate() {
        for (&j, &d2) in list.iter().zip(dists) {
            adj.add_undirected_edge(i, j, d2.sqrt());
        }
    }
    Ok(adj)
}

/// k-NN under shortest-path distance through the symmetrized Euclidean
/// `k_base`-NN graph. Unreachable points rank last, by index.
///
/// With `k_base >= k` every Euclidean neighbor is a direct edge, so the result
/// coincides with Euclidean k-NN; a sparser base graph is what lets paths
/// follow the surface.
pub fn knn_geodesic(cloud: &PointCloud, k_base: usize, k: usize) -> Result<NeighborGraph> {
    let n = cloud.len();
    check_k(k, n)?;
    let geo = floyd_warshall(&knn_adjacency(cloud, k_base)?)?;
    let (neighbors, distances) = (0..n)
        .into_par_iter()
        .map(|i| {
            let cand = geo
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &d)| (d, j))
                .collect();
            k_smallest(cand, k)
        })
        .unzip();
    Ok(NeighborGraph {
        neighbors,
        distances,
        metric: MetricTag::Geodesic,
        k,
    })
}

/// Builds the graph named by `tag`. Mahalanobis graphs use the covariance
/// estimated from `cloud` itself.
pub fn build_graph(cloud: &PointCloud, tag: MetricTag, k: usize, k_base: usize, regularizer: f64) -> Result<NeighborGraph> {
    match tag {
        MetricTag::Euclidean => knn(cloud, k, Metric::Euclidean),
        MetricTag::Mahalanobis => {
            let model = crate::statistics::estimate_covariance(cloud, regularizer)?;
            knn(cloud, k, Metric::Mahalanobis(&model))
        }
        MetricTag::Geodesic => knn_geodesic(cloud, k_base, k),
    }
}
