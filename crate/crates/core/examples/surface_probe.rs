// Local surface descriptors and KMeans over edge-conv features, scored by
// purity against the two-planes labels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statlens::descriptors::{cluster_purity, edgeconv_features, eigen_features, kmeans, EdgeConvConfig};
use statlens::neighborhood::build_graph;
use statlens::shapes::{generate, Shape};
use statlens::statistics::DEFAULT_REGULARIZER;
use statlens::MetricTag;

pub fn run() -> statlens::Result<()> {
    let sample = generate(Shape::TwoPlanes, 200, &mut ChaCha8Rng::seed_from_u64(2))?;
    let labels = sample.labels.expect("two-planes is labeled");
    let cloud = sample.cloud;

    for metric in [MetricTag::Euclidean, MetricTag::Mahalanobis] {
        let graph = build_graph(&cloud, metric, 10, 10, DEFAULT_REGULARIZER)?;
        let eig = eigen_features(&cloud, &graph)?;
        println!("{metric}: eigen descriptor of point 0 {:?}", eig.vectors[0]);
        let feats = edgeconv_features(&cloud, &graph, &EdgeConvConfig::default())?;
        for clusters in 2..=3 {
            let km = kmeans(&feats, clusters, 0, 100, 1e-9)?;
            println!("  K={clusters} purity {:.3}", cluster_purity(&km.labels, &labels));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> statlens::Result<()> {
    run()
}
