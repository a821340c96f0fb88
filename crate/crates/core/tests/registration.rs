mod common;

use common::rng;
use statlens::evaluation::pose_error;
use statlens::geometry::{rotation_distance, DEFAULT_ROTATION_RANGE_DEG, DEFAULT_TRANSLATION_RANGE};
use statlens::registration::{principal_axes_alignment, Initialization};
use statlens::shapes::{generate, Shape};
use statlens::{register, DescriptorKind, MetricTag, PointCloud, RegistrationConfig, RigidMotion};

fn fixture(shape: Shape, n: usize, seed: u64) -> (PointCloud, RigidMotion) {
    let mut r = rng(seed);
    let cloud = generate(shape, n, &mut r).unwrap().cloud;
    let g = RigidMotion::sample(&mut r, DEFAULT_ROTATION_RANGE_DEG, DEFAULT_TRANSLATION_RANGE).unwrap();
    (cloud, g)
}

#[test]
fn icp_recovers_planted_motion() {
    for seed in 0..5 {
        let (src, g) = fixture(Shape::SphereCap, 300, seed);
        let result = register(&src, &g.apply(&src), &RegistrationConfig::point_icp()).unwrap();
        assert!(pose_error(&result.motion, &g).rmse_r_deg < 1.0, "seed {seed}");
        assert!(result.converged);
    }
}

#[test]
fn self_registration_is_identity() {
    let src = generate(Shape::Torus, 300, &mut rng(1)).unwrap().cloud;
    for cfg in [
        RegistrationConfig::point_icp(),
        RegistrationConfig::pipeline(MetricTag::Mahalanobis, DescriptorKind::Eigen),
        RegistrationConfig::pipeline(MetricTag::Euclidean, DescriptorKind::Edgeconv),
    ] {
        let r = register(&src, &src, &cfg).unwrap();
        assert!(r.iterations <= 2);
        let m = r.motion;
        assert!(m.rotation_angle() < 1e-9, "{} {} {}", cfg.label(), m.rotation_angle(), m.translation.norm());
        assert!(m.translation.norm() < 1e-9);
    }
}

#[test]
fn icp_residuals_never_increase() {
    for seed in 0..5 {
        let (src, g) = fixture(Shape::Box, 300, seed);
        for init in [Initialization::Identity, Initialization::PrincipalAxes] {
            for trim_fraction in [0.0, 0.3] {
                let cfg = RegistrationConfig { init, trim_fraction, ..RegistrationConfig::point_icp() };
                let r = register(&src, &g.apply(&src), &cfg).unwrap();
                for w in r.per_iteration_residuals.windows(2) {
                    assert!(w[1] <= w[0] + 1e-9, "{w:?}");
                }
            }
        }
    }
}

#[test]
fn deterministic_for_fixed_config() {
    let (src, g) = fixture(Shape::SphereCap, 200, 3);
    let tgt = g.apply(&src);
    for descriptor in [DescriptorKind::None, DescriptorKind::Eigen, DescriptorKind::Edgeconv] {
        let cfg = RegistrationConfig { seed: 11, ..RegistrationConfig::pipeline(MetricTag::Mahalanobis, descriptor) };
        assert_eq!(register(&src, &tgt, &cfg).unwrap(), register(&src, &tgt, &cfg).unwrap());
    }
}

#[test]
fn conjugate_under_common_motion() {
    for seed in 0..5 {
        let (src, g) = fixture(Shape::SphereCap, 300, seed);
        let tgt = g.apply(&src);
        let h = RigidMotion::sample(&mut rng(100 + seed), DEFAULT_ROTATION_RANGE_DEG, DEFAULT_TRANSLATION_RANGE).unwrap();
        let cfg = RegistrationConfig::point_icp();
        let base = register(&src, &tgt, &cfg).unwrap().motion;
        let moved = register(&h.apply(&src), &h.apply(&tgt), &cfg).unwrap().motion;
        let expect = h.compose(&base).compose(&h.inverse());
        assert!(rotation_distance(&moved.rotation, &expect.rotation) < 1e-6, "seed {seed}");
    }
}

#[test]
fn principal_axes_lands_close() {
    let (src, g) = fixture(Shape::Box, 400, 2);
    let coarse = principal_axes_alignment(&src, &g.apply(&src), 0.3).unwrap();
    assert!(pose_error(&coarse, &g).geodesic_r_deg < 1e-6);
}

#[test]
fn bad_configs_are_rejected() {
    let src = generate(Shape::Sphere, 30, &mut rng(0)).unwrap().cloud;
    let mut cfg = RegistrationConfig::point_icp();
    cfg.trim_fraction = 1.0;
    assert!(register(&src, &src, &cfg).is_err());
    let cfg = RegistrationConfig { k: 40, ..RegistrationConfig::pipeline(MetricTag::Euclidean, DescriptorKind::Eigen) };
    assert!(register(&src, &src, &cfg).is_err());
}
