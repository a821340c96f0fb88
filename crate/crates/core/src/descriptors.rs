//! Per-point descriptors over a neighbor graph and the k-means probe used to
//! inspect them.
//!
//! [`edgeconv_features`] is a single- or multi-layer edge convolution with
//! weights drawn once from a seeded stream instead of trained ones, so that the
//! only thing distinguishing two runs on the same cloud is the graph.
//! [`eigen_features`] is the classical covariance-shape descriptor.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::neighborhood::{MetricTag, NeighborGraph};

pub const DEFAULT_WIDTH: usize = 64;
pub const EIGEN_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    pub layer_count: usize,
    pub seed: u64,
    pub graph_metric: MetricTag,
}

impl DescriptorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Wraps arbitrary feature vectors, e.g. raw coordinates.
    pub fn from_vectors(vectors: Vec<Vec<f64>>, graph_metric: MetricTag) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("descriptor vectors differ in length"));
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("descriptor has non-finite entries"));
        }
        Ok(Self {
            vectors,
            dim,
            layer_count: 0,
            seed: 0,
            graph_metric,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Max,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeConvConfig {
    pub layers: usize,
    pub width: usize,
    pub aggregation: Aggregation,
    pub seed: u64,
}

impl Default for EdgeConvConfig {
    fn default() -> Self {
        Self {
            layers: 1,
            width: DEFAULT_WIDTH,
            aggregation: Aggregation::Max,
            seed: 0,
        }
    }
}

/// Weights of one edge-convolution layer acting on `[x_i || x_j - x_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLayer {
    /// `width x 2 * in_dim`; the first `in_dim` columns multiply `x_i`.
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl EdgeLayer {
    pub fn in_dim(&self) -> usize {
        self.weight.ncols() / 2
    }

    /// `max(W [x_i || x_j - x_i] + b, 0)` for a single edge.
    pub fn edge(&self, xi: &[f64], xj: &[f64]) -> DVector<f64> {
        let d = self.in_dim();
        let mut input = DVector::zeros(2 * d);
        for c in 0..d {
            input[c] = xi[c];
            input[d + c] = xj[c] - xi[c];
        }
        (&self.weight * input + &self.bias).map(|v| v.max(0.0))
    }
}

/// Layer weights for `cfg`, drawn from `ChaCha8Rng::seed_from_u64(cfg.seed)`
/// as standard normals scaled by `1 / sqrt(fan_in)`.
pub fn edgeconv_weights(cfg: &EdgeConvConfig, input_dim: usize) -> Vec<EdgeLayer> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut in_dim = input_dim;
    let mut layers = Vec::with_capacity(cfg.layers);
    for _ in 0..cfg.layers {
        let fan_in = 2 * in_dim;
        let scale = 1.0 / (fan_in as f64).sqrt();
        let weight = DMatrix::from_fn(cfg.width, fan_in, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let bias = DVector::from_fn(cfg.width, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        layers.push(EdgeLayer { weight, bias });
        in_dim = cfg.width;
    }
    layers
}

fn check_graph(cloud: &PointCloud, graph: &NeighborGraph) -> Result<()> {
    if graph.len() != cloud.len() {
        return Err(Error::invalid(format!(
            "graph has {} nodes but cloud has {} points",
            graph.len(),
            cloud.len()
        )));
    }
    if graph.neighbors.iter().flatten().any(|&j| j >= cloud.len()) {
        return Err(Error::invalid("graph references points outside the cloud"));
    }
    Ok(())
}

/// Edge-convolution features over a static graph. Each layer maps every edge
/// `(i, j)` through the shared layer and reduces over `j` with max (or sum).
pub fn edgeconv_features(cloud: &PointCloud, graph: &NeighborGraph, cfg: &EdgeConvConfig) -> Result<DescriptorSet> {
    check_graph(cloud, graph)?;
    if cfg.layers == 0 || cfg.width == 0 {
        return Err(Error::invalid("edge convolution needs at least one layer of non-zero width"));
    }
    let layers = edgeconv_weights(cfg, 3);
    let mut features: Vec<Vec<f64>> = cloud.points().iter().map(|p| vec![p.x, p.y, p.z]).collect();
    for layer in &layers {
        let d = layer.in_dim();
        let self_part = layer.weight.columns(0, d);
        let offset_part = layer.weight.columns(d, d);
        let prev = &features;
        features = (0..prev.len())
            .into_par_iter()
            .map(|i| {
                let xi = DVector::from_column_slice(&prev[i]);
                let base = self_part * &xi + &layer.bias;
                let mut acc = match cfg.aggregation {
                    Aggregation::Max => DVector::from_element(cfg.width, f64::NEG_INFINITY),
                    Aggregation::Sum => DVector::zeros(cfg.width),
                };
                for &j in &graph.neighbors[i] {
                    let offset = DVector::from_iterator(d, prev[j].iter().zip(&prev[i]).map(|(a, b)| a - b));
                    let h = (&base + offset_part * offset).map(|v| v.max(0.0));
                    match cfg.aggregation {
                        Aggregation::Max => acc.zip_apply(&h, |a, b| *a = a.max(b)),
                        Aggregation::Sum => acc += h,
                    }
                }
                if graph.neighbors[i].is_empty() {
                    acc.fill(0.0);
                }
                acc.iter().copied().collect()
            })
            .collect();
    }
    Ok(DescriptorSet {
        vectors: features,
        dim: cfg.width,
        layer_count: cfg.layers,
        seed: cfg.seed,
        graph_metric: graph.metric,
    })
}

/// Covariance-shape descriptor `(linearity, planarity, scattering, nx, ny, nz)`
/// of each point's neighborhood (the point itself included). The normal is the
/// smallest-eigenvalue eigenvector flipped into the `z >= 0` hemisphere.
pub fn eigen_features(cloud: &PointCloud, graph: &NeighborGraph) -> Result<DescriptorSet> {
    check_graph(cloud, graph)?;
    if graph.k < 3 {
        return Err(Error::invalid(format!("eigen features need k >= 3, got {}", graph.k)));
    }
    let pts = cloud.points();
    let vectors = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let members = std::iter::once(i).chain(graph.neighbors[i].iter().copied());
            let count = graph.neighbors[i].len() + 1;
            let mean = members.clone().map(|j| pts[j]).sum::<Vector3<f64>>() / count as f64;
            let mut cov = Matrix3::zeros();
            for j in members {
                let d = pts[j] - mean;
                cov += d * d.transpose();
            }
            cov /= count as f64;
            shape_descriptor(&cov).to_vec()
        })
        .collect();
    Ok(DescriptorSet {
        vectors,
        dim: EIGEN_DIM,
        layer_count: 1,
        seed: 0,
        graph_metric: graph.metric,
    })
}

fn shape_descriptor(cov: &Matrix3<f64>) -> [f64; EIGEN_DIM] {
    let eig = SymmetricEigen::new(0.5 * (cov + cov.transpose()));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    if !(l1 > 0.0) {
        return [0.0; EIGEN_DIM];
    }
    // eigenvalues at round-off level of l1 are zero
    let clean = |l: f64| if l < 1e-12 * l1 { 0.0 } else { l };
    let l2 = clean(eig.eigenvalues[order[1]]);
    let l3 = clean(eig.eigenvalues[order[2]]).min(l2);
    let mut normal: Vector3<f64> = eig.eigenvectors.column(order[2]).into_owned();
    let flip = match (normal.z, normal.y, normal.x) {
        (z, _, _) if z != 0.0 => z < 0.0,
        (_, y, _) if y != 0.0 => y < 0.0,
        (_, _, x) => x < 0.0,
    };
    if flip {
        normal = -normal;
    }
    [
        (l1 - l2) / l1,
        (l2 - l3) / l1,
        l3 / l1,
        normal.x,
        normal.y,
        normal.z,
    ]
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Sum of squared distances to the assigned centroid after each assignment step.
    pub objective: Vec<f64>,
}

fn nearest_centroid(v: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(v, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm from farthest-point seeding. The first center is a random
/// point of the seeded stream; every following one is the point farthest from
/// the centers picked so far (lowest index on ties). Stops when no centroid
/// moves more than `tol` or after `max_iters` rounds.
pub fn kmeans(features: &DescriptorSet, clusters: usize, seed: u64, max_iters: usize, tol: f64) -> Result<KMeansResult> {
    let data = &features.vectors;
    let n = data.len();
    if clusters == 0 || clusters > n {
        return Err(Error::invalid(format!("K must satisfy 1 <= K <= {n}, got {clusters}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centroids = vec![data[first].clone()];
    let mut min_d: Vec<f64> = data.iter().map(|v| squared_distance(v, &data[first])).collect();
    while centroids.len() < clusters {
        let mut far = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[far] {
                far = i;
            }
        }
        centroids.push(data[far].clone());
        for (m, v) in min_d.iter_mut().zip(data) {
            *m = m.min(squared_distance(v, &data[far]));
        }
    }

    let mut labels = vec![0; n];
    let mut objective = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = data.par_iter().map(|v| nearest_centroid(v, &centroids)).collect();
        objective.push(assigned.iter().map(|a| a.1).sum());
        for (l, a) in labels.iter_mut().zip(&assigned) {
            *l = a.0;
        }
        let mut sums = vec![vec![0.0; features.dim]; clusters];
        let mut counts = vec![0usize; clusters];
        for (v, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(v) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..clusters {
            if counts[c] == 0 {
                continue;
            }
            let mean: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(squared_distance(&mean, &centroids[c]).sqrt());
            centroids[c] = mean;
        }
        if shift < tol {
            break;
        }
    }
    Ok(KMeansResult {
        labels,
        centroids,
        iterations,
        objective,
    })
}

/// Majority-class fraction of each non-empty cluster, averaged over clusters.
pub fn cluster_purity(labels: &[usize], truth: &[usize]) -> f64 {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let classes = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; classes]; k];
    for (&l, &t) in labels.iter().zip(truth) {
        table[l][t] += 1;
    }
    let purities: Vec<f64> = table
        .iter()
        .filter_map(|row| {
            let size: usize = row.iter().sum();
            (size > 0).then(|| *row.iter().max().unwrap() as f64 / size as f64)
        })
        .collect();
    purities.iter().sum::<f64>() / purities.len() as f64
}

/// CSV with header `point_index,x,y,z,label`.
pub fn labels_csv(cloud: &PointCloud, labels: &[usize]) -> String {
    let mut out = String::from("point_index,x,y,z,label\n");
    for (i, (p, l)) in cloud.points().iter().zip(labels).enumerate() {
        let _ = writeln!(out, "{i},{:.16e},{:.16e},{:.16e},{l}", p.x, p.y, p.z);
    }
    out
}
