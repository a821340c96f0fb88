//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::Matrix3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use statlens::geometry::Point;
use statlens::neighborhood::DistanceMatrix;
use statlens::PointCloud;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    PointCloud::new((0..n).map(|_| random_point(rng)).collect()).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0))
}

/// Random symmetric positive-definite matrix `B Bᵀ + 0.1 I`.
pub fn random_spd(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let b = random_matrix(rng);
    b * b.transpose() + Matrix3::identity() * 0.1
}

/// Invertible matrix with condition number kept moderate.
pub fn random_invertible(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    loop {
        let a = random_matrix(rng) + Matrix3::identity();
        let s = a.singular_values();
        if s.min() > 0.2 {
            return a;
        }
    }
}

/// `(x - y)ᵀ C⁻¹ (x - y)` through an explicit general inverse.
pub fn quadratic(x: &Point, y: &Point, c: &Matrix3<f64>) -> f64 {
    let d = x - y;
    (d.transpose() * c.try_inverse().unwrap() * d)[(0, 0)]
}

/// Sorted-by-(distance, index) brute-force neighbor lists under `dist`.
pub fn brute_knn(points: &[Point], k: usize, dist: impl Fn(&Point, &Point) -> f64) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| (dist(&points[i], &points[j]), j))
                .collect();
            cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            cand.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// O(n²) Dijkstra from every source over a dense adjacency matrix.
pub fn dijkstra_all(adj: &DistanceMatrix) -> Vec<Vec<f64>> {
    let n = adj.size();
    (0..n)
        .map(|s| {
            let mut dist = vec![f64::INFINITY; n];
            let mut done = vec![false; n];
            dist[s] = 0.0;
            for _ in 0..n {
                let Some(u) = (0..n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap()) else {
                    break;
                };
                done[u] = true;
                for v in 0..n {
                    let w = adj.get(u, v);
                    if u != v && w.is_finite() && dist[u] + w < dist[v] {
                        dist[v] = dist[u] + w;
                    }
                }
            }
            dist
        })
        .collect()
}

/// Symmetrized k-NN adjacency built from the brute-force oracle, with each edge
/// weight passed through `weight`.
pub fn knn_graph(points: &[Point], k: usize, weight: impl Fn(f64) -> f64) -> DistanceMatrix {
    let mut adj = DistanceMatrix::unconnected(points.len());
    for (i, list) in brute_knn(points, k, |a, b| (a - b).norm()).iter().enumerate() {
        for &j in list {
            adj.add_undirected_edge(i, j, weight((points[i] - points[j]).norm()));
        }
    }
    adj
}
