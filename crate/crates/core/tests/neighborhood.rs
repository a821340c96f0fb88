mod common;

use common::{brute_knn, dijkstra_all, knn_graph, quadratic, random_cloud, random_invertible, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use statlens::neighborhood::{floyd_warshall, knn, knn_adjacency, knn_geodesic, DistanceMatrix, Metric};
use statlens::shapes::{generate, Shape};
use statlens::statistics::estimate_covariance;
use statlens::PointCloud;

#[test]
fn euclidean_matches_brute_force() {
    for seed in 0..10 {
        let cloud = random_cloud(&mut rng(seed), 80);
        let g = knn(&cloud, 7, Metric::Euclidean).unwrap();
        assert_eq!(g.neighbors, brute_knn(cloud.points(), 7, |a, b| (a - b).norm()));
    }
}

#[test]
fn mahalanobis_matches_brute_force() {
    for seed in 0..10 {
        let cloud = random_cloud(&mut rng(seed), 80);
        let model = estimate_covariance(&cloud, 1e-5).unwrap();
        let g = knn(&cloud, 7, Metric::Mahalanobis(&model)).unwrap();
        let want = brute_knn(cloud.points(), 7, |a, b| quadratic(a, b, &model.covariance));
        assert_eq!(g.neighbors, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relabeling_commutes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cloud = random_cloud(&mut r, 40);
        let mut order: Vec<usize> = (0..40).collect();
        order.shuffle(&mut r);
        let model = estimate_covariance(&cloud, 1e-5).unwrap();
        for metric in [Metric::Euclidean, Metric::Mahalanobis(&model)] {
            let g = knn(&cloud, 5, metric).unwrap();
            let h = knn(&cloud.permuted(&order).unwrap(), 5, metric).unwrap();
            prop_assert_eq!(h.neighbors, g.permuted(&order).neighbors);
        }
    }

    #[test]
    fn shortest_paths_obey_triangle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cloud = random_cloud(&mut r, 48);
        let d = floyd_warshall(&knn_adjacency(&cloud, 4).unwrap()).unwrap();
        for _ in 0..500 {
            let (i, j, m) = (r.random_range(0..48), r.random_range(0..48), r.random_range(0..48));
            if d.get(i, m).is_finite() && d.get(m, j).is_finite() {
                prop_assert!(d.get(i, j) <= d.get(i, m) + d.get(m, j) + 1e-9);
            }
        }
    }
}

#[test]
fn mahalanobis_neighbors_survive_linear_maps() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let cloud = random_cloud(&mut r, 60);
        let a = random_invertible(&mut r);
        let moved = PointCloud::new(cloud.points().iter().map(|p| a * p).collect()).unwrap();
        let m0 = estimate_covariance(&cloud, 0.0).unwrap();
        let m1 = estimate_covariance(&moved, 0.0).unwrap();
        let g0 = knn(&cloud, 8, Metric::Mahalanobis(&m0)).unwrap();
        let g1 = knn(&moved, 8, Metric::Mahalanobis(&m1)).unwrap();
        assert_eq!(g0.neighbors, g1.neighbors, "seed {seed}");
    }
}

#[test]
fn floyd_warshall_matches_dijkstra_on_integer_weights() {
    for seed in 0..20 {
        let cloud = random_cloud(&mut rng(seed), 64);
        let adj = knn_graph(cloud.points(), 5, |d| (d * 1000.0).ceil());
        let fw = floyd_warshall(&adj).unwrap();
        let dj = dijkstra_all(&adj);
        for (i, row) in dj.iter().enumerate() {
            assert_eq!(fw.row(i), row.as_slice(), "seed {seed} row {i}");
        }
    }
}

#[test]
fn floyd_warshall_matches_dijkstra_on_lengths() {
    let cloud = random_cloud(&mut rng(99), 200);
    let adj = knn_adjacency(&cloud, 6).unwrap();
    let fw = floyd_warshall(&adj).unwrap();
    for (i, row) in dijkstra_all(&adj).iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            let got = fw.get(i, j);
            assert!(got == d || (got - d).abs() <= 1e-12 * d, "{i},{j}: {got} vs {d}");
        }
    }
}

#[test]
fn floyd_warshall_rejects_bad_entries() {
    let mut m = DistanceMatrix::unconnected(3);
    m.set(0, 1, -1.0);
    assert!(floyd_warshall(&m).is_err());
    let mut m = DistanceMatrix::unconnected(3);
    m.set(2, 2, 1.0);
    assert!(floyd_warshall(&m).is_err());
}

#[test]
fn geodesic_neighbors_follow_the_ring() {
    let cloud = generate(Shape::CRing, 120, &mut rng(3)).unwrap().cloud;
    let (first, last) = (0, cloud.len() - 1);
    let euc = knn(&cloud, 10, Metric::Euclidean).unwrap();
    let geo = knn_geodesic(&cloud, 4, 10).unwrap();
    assert!(euc.neighbors[first].contains(&last));
    assert!(!geo.neighbors[first].contains(&last));

    let paths = dijkstra_all(&knn_graph(cloud.points(), 4, |d| d));
    for i in [first, last, 60] {
        let mut order: Vec<usize> = (0..cloud.len()).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| paths[i][a].partial_cmp(&paths[i][b]).unwrap().then(a.cmp(&b)));
        assert_eq!(geo.neighbors[i], order[..10]);
    }
}

#[test]
fn base_graph_at_least_k_reproduces_euclidean() {
    let cloud = random_cloud(&mut rng(8), 100);
    let euc = knn(&cloud, 6, Metric::Euclidean).unwrap();
    assert_eq!(knn_geodesic(&cloud, 6, 6).unwrap().neighbors, euc.neighbors);
    assert_eq!(knn_geodesic(&cloud, 9, 6).unwrap().neighbors, euc.neighbors);
}

#[test]
fn geodesic_stays_within_component() {
    let mut pts = random_cloud(&mut rng(5), 30).points().to_vec();
    pts.extend(random_cloud(&mut rng(6), 30).points().iter().map(|p| p + nalgebra::Vector3::new(50.0, 0.0, 0.0)));
    let cloud = PointCloud::new(pts).unwrap();
    let g = knn_geodesic(&cloud, 5, 10).unwrap();
    for (i, list) in g.neighbors.iter().enumerate() {
        assert!(list.iter().all(|&j| (j < 30) == (i < 30)));
    }
}

#[test]
fn two_planes_favor_mahalanobis() {
    let sample = generate(Shape::TwoPlanes, 400, &mut rng(0)).unwrap();
    let labels = sample.labels.unwrap();
    let model = estimate_covariance(&sample.cloud, 1e-5).unwrap();
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let e = knn(&sample.cloud, 10, Metric::Euclidean).unwrap();
    let m = knn(&sample.cloud, 10, Metric::Mahalanobis(&model)).unwrap();
    assert!(mean(m.same_label_fractions(&labels)) > mean(e.same_label_fractions(&labels)));
    assert!(mean(e.overlap_fractions(&m)) < 1.0);
}
