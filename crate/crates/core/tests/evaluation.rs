mod common;

use common::{random_cloud, rng};
use proptest::prelude::*;
use statlens::evaluation::{pose_error, set_distance};
use statlens::geometry::{Interval, DEFAULT_TRANSLATION_RANGE};
use statlens::{PointCloud, RigidMotion};

fn brute(x: &PointCloud, y: &PointCloud) -> (f64, f64) {
    let directed = |a: &PointCloud, b: &PointCloud| -> (f64, f64) {
        let mut sum = 0.0;
        let mut worst: f64 = 0.0;
        for p in a.points() {
            let mut best = f64::INFINITY;
            for q in b.points() {
                let d = (p - q).norm_squared();
                if d < best {
                    best = d;
                }
            }
            sum += best;
            worst = worst.max(best);
        }
        (sum / a.len() as f64, worst.sqrt())
    };
    let (a, ha) = directed(x, y);
    let (b, hb) = directed(y, x);
    (a + b, ha.max(hb))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pose_error_basics(seed in any::<u64>()) {
        let wide = Interval::new(0.0, 180.0).unwrap();
        let a = RigidMotion::sample(&mut rng(seed), wide, DEFAULT_TRANSLATION_RANGE).unwrap();
        let b = RigidMotion::sample(&mut rng(seed ^ 1), wide, DEFAULT_TRANSLATION_RANGE).unwrap();
        let e = pose_error(&a, &a);
        prop_assert!(e.rmse_r_deg < 1e-9 && e.rmse_t == 0.0 && e.geodesic_r_deg < 1e-5);
        prop_assert!((pose_error(&a, &b).geodesic_r_deg - pose_error(&b, &a).geodesic_r_deg).abs() < 1e-9);
    }

    #[test]
    fn set_distance_is_rigid_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = (random_cloud(&mut r, 50), random_cloud(&mut r, 70));
        let g = RigidMotion::sample(&mut r, Interval::new(0.0, 180.0).unwrap(), DEFAULT_TRANSLATION_RANGE).unwrap();
        let (a, b) = (set_distance(&x, &y), set_distance(&g.apply(&x), &g.apply(&y)));
        prop_assert!((a.chamfer - b.chamfer).abs() < 1e-9 && (a.hausdorff - b.hausdorff).abs() < 1e-9);
        prop_assert_eq!(set_distance(&y, &x), a);
    }
}

#[test]
fn matches_double_loop() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let (x, y) = (random_cloud(&mut r, 256), random_cloud(&mut r, 200));
        let d = set_distance(&x, &y);
        assert_eq!((d.chamfer, d.hausdorff), brute(&x, &y));
    }
}

#[test]
fn permutation_invariant() {
    let mut r = rng(4);
    let (x, y) = (random_cloud(&mut r, 64), random_cloud(&mut r, 64));
    let order: Vec<usize> = (0..64).rev().collect();
    let d = set_distance(&x, &y);
    assert_eq!(set_distance(&x.permuted(&order).unwrap(), &y).hausdorff, d.hausdorff);
}
