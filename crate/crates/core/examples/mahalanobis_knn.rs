// Euclidean vs. Mahalanobis neighborhoods on two close parallel planes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statlens::neighborhood::{knn, Metric};
use statlens::shapes::{generate, Shape};
use statlens::statistics::{estimate_covariance, DEFAULT_REGULARIZER};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn run() -> statlens::Result<()> {
    let sample = generate(Shape::TwoPlanes, 400, &mut ChaCha8Rng::seed_from_u64(11))?;
    let labels = sample.labels.expect("two-planes is labeled");
    let cloud = sample.cloud;

    let model = estimate_covariance(&cloud, DEFAULT_REGULARIZER)?;
    println!("covariance eigenvalues {:?}", model.eigenvalues());

    let euclid = knn(&cloud, 10, Metric::Euclidean)?;
    let mahal = knn(&cloud, 10, Metric::Mahalanobis(&model))?;
    println!("same-plane fraction, euclidean   {:.3}", mean(&euclid.same_label_fractions(&labels)));
    println!("same-plane fraction, mahalanobis {:.3}", mean(&mahal.same_label_fractions(&labels)));
    println!("neighbor overlap                 {:.3}", mean(&euclid.overlap_fractions(&mahal)));
    Ok(())
}

#[allow(dead_code)]
fn main() -> statlens::Result<()> {
    run()
}
