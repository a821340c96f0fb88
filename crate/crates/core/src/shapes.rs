//! Synthetic test shapes. These are the fixtures used throughout the tests,
//! the examples and the benchmark scenarios.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

/// Vertical gap between the two sheets of [`Shape::TwoPlanes`].
pub const TWO_PLANES_GAP: f64 = 0.1;
/// Angular width of the opening of [`Shape::CRing`], radians.
pub const C_RING_GAP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Unit square `[-1, 1]^2` at `z = 0`.
    Plane,
    /// Unit sphere surface.
    Sphere,
    /// Torus with radii 1 and 0.3 around the z axis.
    Torus,
    /// Surface of the box `[-1, 1] x [-0.6, 0.6] x [-0.3, 0.3]`.
    Box,
    /// Two parallel unit squares at `z = 0` and `z = TWO_PLANES_GAP`, half the points each.
    TwoPlanes,
    /// Evenly spaced unit circle with an opening of `C_RING_GAP` radians around +x.
    CRing,
    /// Unit-sphere cap of polar angle <= 60 degrees with a 60 degree azimuthal wedge removed.
    SphereCap,
}

impl Shape {
    pub const ALL: [Shape; 7] = [
        Shape::Plane,
        Shape::Sphere,
        Shape::Torus,
        Shape::Box,
        Shape::TwoPlanes,
        Shape::CRing,
        Shape::SphereCap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Plane => "plane",
            Shape::Sphere => "sphere",
            Shape::Torus => "torus",
            Shape::Box => "box",
            Shape::TwoPlanes => "two-planes",
            Shape::CRing => "c-ring",
            Shape::SphereCap => "sphere-cap",
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shape '{s}'")))
    }
}

/// Generated points plus ground-truth group labels where the shape has them
/// (the sheet index for [`Shape::TwoPlanes`]).
#[derive(Debug, Clone)]
pub struct Sample {
    pub cloud: PointCloud,
    pub labels: Option<Vec<usize>>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Point {
    loop {
        let v = Point::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

pub fn generate<R: Rng + ?Sized>(shape: Shape, n: usize, rng: &mut R) -> Result<Sample> {
    if n == 0 {
        return Err(Error::invalid("shape needs at least one point"));
    }
    let mut labels = None;
    let points: Vec<Point> = match shape {
        Shape::Plane => (0..n)
            .map(|_| Point::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), 0.0))
            .collect(),
        Shape::Sphere => (0..n).map(|_| unit_vector(rng)).collect(),
        Shape::Torus => {
            let (major, minor) = (1.0, 0.3);
            let mut pts = Vec::with_capacity(n);
            while pts.len() < n {
                let u = uniform(rng, 0.0, TAU);
                let v = uniform(rng, 0.0, TAU);
                // area element is proportional to (major + minor cos v)
                if rng.random::<f64>() * (major + minor) <= major + minor * v.cos() {
                    let r = major + minor * v.cos();
                    pts.push(Point::new(r * u.cos(), r * u.sin(), minor * v.sin()));
                }
            }
            pts
        }
        Shape::Box => {
            let half = [1.0, 0.6, 0.3];
            let areas = [half[1] * half[2], half[0] * half[2], half[0] * half[1]];
            let total: f64 = areas.iter().sum();
            (0..n)
                .map(|_| {
                    let mut pick = rng.random::<f64>() * total;
                    let mut axis = 2;
                    for (a, area) in areas.iter().enumerate() {
                        if pick < *area {
                            axis = a;
                            break;
                        }
                        pick -= area;
                    }
                    let mut p = [0.0; 3];
                    for (d, h) in half.iter().enumerate() {
                        p[d] = uniform(rng, -h, *h);
                    }
                    p[axis] = if rng.random::<bool>() { half[axis] } else { -half[axis] };
                    Point::from(p)
                })
                .collect()
        }
        Shape::TwoPlanes => {
            let lower = n / 2;
            labels = Some((0..n).map(|i| usize::from(i >= lower)).collect());
            (0..n)
                .map(|i| {
                    let z = if i >= lower { TWO_PLANES_GAP } else { 0.0 };
                    Point::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), z)
                })
                .collect()
        }
        Shape::CRing => {
            let span = TAU - C_RING_GAP;
            let step = if n > 1 { span / (n - 1) as f64 } else { 0.0 };
            (0..n)
                .map(|i| {
                    let a = C_RING_GAP / 2.0 + step * i as f64;
                    Point::new(a.cos(), a.sin(), 0.0)
                })
                .collect()
        }
        Shape::SphereCap => {
            let z_min = (PI / 3.0).cos();
            let max_azimuth = 300f64.to_radians();
            (0..n)
                .map(|_| {
                    let z = uniform(rng, z_min, 1.0);
                    let phi = uniform(rng, 0.0, max_azimuth);
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    Point::new(r * phi.cos(), r * phi.sin(), z)
                })
                .collect()
        }
    };
    Ok(Sample {
        cloud: PointCloud::new(points)?.with_id(shape.name()),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_round_trip() {
        for s in Shape::ALL {
            assert_eq!(s.name().parse::<Shape>().unwrap(), s);
        }
        assert!("cube".parse::<Shape>().is_err());
    }

    #[test]
    fn shapes_have_requested_size_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in Shape::ALL {
            let sample = generate(s, 300, &mut rng).unwrap();
            assert_eq!(sample.cloud.len(), 300);
            for p in sample.cloud.points() {
                assert!(p.norm() <= 1.5, "{s}: {p:?}");
            }
        }
        let sphere = generate(Shape::Sphere, 50, &mut rng).unwrap();
        assert!(sphere.cloud.points().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn two_planes_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = generate(Shape::TwoPlanes, 400, &mut rng).unwrap();
        let labels = s.labels.unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 200);
        for (p, l) in s.cloud.points().iter().zip(&labels) {
            assert_eq!(p.z, if *l == 1 { TWO_PLANES_GAP } else { 0.0 });
        }
    }
}
