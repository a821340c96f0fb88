// Register a perturbed copy of a shape with point-ICP and a descriptor pipeline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statlens::corruption::{corrupt, NoiseSpec};
use statlens::evaluation::pose_error;
use statlens::shapes::{generate, Shape};
use statlens::{register, DescriptorKind, MetricTag, RegistrationConfig, RigidMotion};

pub fn run() -> statlens::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let source = generate(Shape::SphereCap, 256, &mut rng)?.cloud;
    let truth = RigidMotion::from_euler_deg([20.0, -10.0, 30.0], [0.2, -0.1, 0.3])?;
    let (source, target) = corrupt(&source, &truth.apply(&source), &NoiseSpec::gaussian(0.01, 0.05), &mut rng)?;

    for cfg in [
        RegistrationConfig::point_icp(),
        RegistrationConfig::pipeline(MetricTag::Mahalanobis, DescriptorKind::Eigen),
    ] {
        let result = register(&source, &target, &cfg)?;
        let err = pose_error(&result.motion, &truth);
        println!(
            "{:<18} iterations {:>2}  rmse(R) {:.3} deg  rmse(t) {:.4}",
            cfg.label(),
            result.iterations,
            err.rmse_r_deg,
            err.rmse_t
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> statlens::Result<()> {
    run()
}
