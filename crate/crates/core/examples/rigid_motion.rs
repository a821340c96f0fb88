// Plant a rigid motion, recover it with Kabsch from known correspondences,
// and score the estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statlens::evaluation::pose_error;
use statlens::geometry::{kabsch, DEFAULT_ROTATION_RANGE_DEG, DEFAULT_TRANSLATION_RANGE};
use statlens::shapes::{generate, Shape};
use statlens::{CorrespondenceSet, RigidMotion};

pub fn run() -> statlens::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let source = generate(Shape::Torus, 256, &mut rng)?.cloud;
    let truth = RigidMotion::sample(&mut rng, DEFAULT_ROTATION_RANGE_DEG, DEFAULT_TRANSLATION_RANGE)?;
    let target = truth.apply(&source);

    let estimate = kabsch(&source, &target, &CorrespondenceSet::identity(source.len()))?;
    let err = pose_error(&estimate, &truth);
    println!("planted euler (deg)   {:?}", truth.euler_deg());
    println!("recovered euler (deg) {:?}", estimate.euler_deg());
    println!("rmse(R) {:.3e} deg, rmse(t) {:.3e}", err.rmse_r_deg, err.rmse_t);
    Ok(())
}

#[allow(dead_code)]
fn main() -> statlens::Result<()> {
    run()
}
