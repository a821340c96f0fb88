//! Pose and point-set error metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{rotation_distance, wrap_deg, PointCloud, RigidMotion};
use crate::statistics::euclidean_squared;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    /// RMS of the three ZYX Euler-angle differences, degrees.
    pub rmse_r_deg: f64,
    /// RMS of the three translation-component differences.
    pub rmse_t: f64,
    /// Angle of `R_pᵀ R_t`, degrees.
    pub geodesic_r_deg: f64,
}

fn rms(v: [f64; 3]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / 3.0).sqrt()
}

pub fn pose_error(predicted: &RigidMotion, truth: &RigidMotion) -> PoseError {
    let ep = predicted.euler_deg();
    let et = truth.euler_deg();
    let dr = [0, 1, 2].map(|i| wrap_deg(ep[i] - et[i]));
    let dt = [0, 1, 2].map(|i| predicted.translation[i] - truth.translation[i]);
    PoseError {
        rmse_r_deg: rms(dr),
        rmse_t: rms(dt),
        geodesic_r_deg: rotation_distance(&predicted.rotation, &truth.rotation).to_degrees(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetDistance {
    /// Sum of both directed mean squared nearest-neighbor distances.
    pub chamfer: f64,
    /// Largest nearest-neighbor distance in either direction.
    pub hausdorff: f64,
}

/// Squared distance from each point of `from` to its nearest point in `to`.
fn nearest_squared(from: &PointCloud, to: &PointCloud) -> Vec<f64> {
    let targets = to.points();
    from.points()
        .par_iter()
        .map(|p| targets.iter().map(|q| euclidean_squared(p, q)).fold(f64::INFINITY, f64::min))
        .collect()
}

pub fn set_distance(x: &PointCloud, y: &PointCloud) -> SetDistance {
    let xy = nearest_squared(x, y);
    let yx = nearest_squared(y, x);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    SetDistance {
        chamfer: mean(&xy) + mean(&yx),
        hausdorff: max(&xy).max(max(&yx)).sqrt(),
    }
}
