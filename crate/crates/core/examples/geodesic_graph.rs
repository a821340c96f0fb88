// Geodesic neighbors through an all-pairs shortest-path table on a C-shaped ring.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statlens::neighborhood::{floyd_warshall, knn, knn_adjacency, knn_geodesic, Metric};
use statlens::shapes::{generate, Shape};

pub fn run() -> statlens::Result<()> {
    let cloud = generate(Shape::CRing, 200, &mut ChaCha8Rng::seed_from_u64(5))?.cloud;
    let (first, last) = (0, cloud.len() - 1);

    let paths = floyd_warshall(&knn_adjacency(&cloud, 4)?)?;
    let chord = (cloud.points()[first] - cloud.points()[last]).norm();
    println!("ring ends: chord {chord:.3}, along the ring {:.3}", paths.get(first, last));

    let geo = knn_geodesic(&cloud, 4, 12)?;
    let euc = knn(&cloud, 12, Metric::Euclidean)?;
    println!("point {first}, euclidean neighbors {:?}", euc.neighbors[first]);
    println!("point {first}, geodesic neighbors  {:?}", geo.neighbors[first]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> statlens::Result<()> {
    run()
}
