//! Point clouds, rigid motions and the weighted closed-form alignment solver.

use nalgebra::{Matrix3, Vector3, SVD};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Ordered set of 3D points. Every coordinate is finite and the cloud is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    pub id: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point cloud must contain at least one point"));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, id: None })
    }

    pub fn from_coords(coords: &[[f64; 3]]) -> Result<Self> {
        Self::new(coords.iter().map(|c| Point::new(c[0], c[1], c[2])).collect())
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point {
        self.points.iter().sum::<Point>() / self.points.len() as f64
    }

    /// Sub-cloud made of the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len());
        for &i in indices {
            let p = self
                .points
                .get(i)
                .ok_or_else(|| Error::invalid(format!("index {i} out of range for {} points", self.len())))?;
            points.push(*p);
        }
        let mut out = Self::new(points)?;
        out.id = self.id.clone();
        Ok(out)
    }

    /// Same cloud with points reordered so that `out[i] = self[order[i]]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::invalid("permutation length differs from cloud length"));
        }
        self.select(order)
    }
}

/// Closed interval used by the transform sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let iv = Self { lo, hi };
        iv.validate()?;
        Ok(iv)
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::invalid(format!("bad interval [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * u
    }
}

/// Default rotation range per axis, in degrees.
pub const DEFAULT_ROTATION_RANGE_DEG: Interval = Interval { lo: 0.0, hi: 45.0 };
/// Default translation range per component.
pub const DEFAULT_TRANSLATION_RANGE: Interval = Interval { lo: -0.5, hi: 0.5 };

/// Proper rigid motion `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidMotion {
    fn default() -> Self {
        Self::identity()
    }
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

impl RigidMotion {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a motion from an orthonormal, determinant +1 matrix. The check is
    /// done at 1e-9 elementwise.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite rigid motion"));
        }
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("matrix is not a proper rotation"));
        }
        Ok(Self { rotation, translation })
    }

    /// `Rz(gamma) * Ry(beta) * Rx(alpha)` for `euler_deg = (alpha, beta, gamma)`.
    pub fn from_euler_deg(euler_deg: [f64; 3], translation: [f64; 3]) -> Result<Self> {
        if !euler_deg.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("euler angles and translation must be finite"));
        }
        let [a, b, g] = euler_deg.map(f64::to_radians);
        Ok(Self {
            rotation: rot_z(g) * rot_y(b) * rot_x(a),
            translation: Vector3::from(translation),
        })
    }

    /// Draws each Euler angle and each translation component independently and
    /// uniformly from the given intervals. Draw order: x, y, z angles then x, y, z
    /// translation.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, rotation_deg: Interval, translation: Interval) -> Result<Self> {
        rotation_deg.validate()?;
        translation.validate()?;
        let angles = [(); 3].map(|_| rotation_deg.sample(rng));
        let shift = [(); 3].map(|_| translation.sample(rng));
        Self::from_euler_deg(angles, shift)
    }

    /// Inverse of [`RigidMotion::from_euler_deg`], angles in degrees wrapped to (-180, 180].
    pub fn euler_deg(&self) -> [f64; 3] {
        let r = &self.rotation;
        let beta = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        let alpha = r[(2, 1)].atan2(r[(2, 2)]);
        let gamma = r[(1, 0)].atan2(r[(0, 0)]);
        [alpha, beta, gamma].map(|a| wrap_deg(a.to_degrees()))
    }

    pub fn transform_point(&self, p: &Point) -> Point {
        self.rotation * p + self.translation
    }

    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud {
            points: cloud.points.iter().map(|p| self.transform_point(p)).collect(),
            id: cloud.id.clone(),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidMotion {
        let rt = self.rotation.transpose();
        RigidMotion {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle in radians, in [0, pi].
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }
}

/// Wraps an angle in degrees to (-180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let mut w = a % 360.0;
    if w <= -180.0 {
        w += 360.0;
    } else if w > 180.0 {
        w -= 360.0;
    }
    w
}

/// Angle of a rotation matrix. Uses `atan2(sin, cos)` so small angles keep full
/// relative precision.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let sin_axis = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let s = 0.5 * sin_axis.norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

/// Geodesic distance on SO(3) between two rotations, in radians.
pub fn rotation_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    rotation_angle(&(a.transpose() * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceSet {
    pub pairs: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<Correspondence>) -> Self {
        Self { pairs }
    }

    /// Unit-weight pairs `(i, i)` for `i in 0..n`.
    pub fn identity(n: usize) -> Self {
        Self::from_pairs((0..n).map(|i| (i, i)))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            pairs: pairs
                .into_iter()
                .map(|(source, target)| Correspondence { source, target, weight: 1.0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn check(&self, source_len: usize, target_len: usize) -> Result<f64> {
        let mut total = 0.0;
        for c in &self.pairs {
            if c.source >= source_len || c.target >= target_len {
                return Err(Error::invalid(format!(
                    "correspondence ({}, {}) out of range for clouds of {source_len} and {target_len} points",
                    c.source, c.target
                )));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::invalid(format!("bad correspondence weight {}", c.weight)));
            }
            total += c.weight;
        }
        if total <= 0.0 {
            return Err(Error::invalid("correspondence weights sum to zero"));
        }
        Ok(total)
    }
}

/// Weighted sum of squared residuals `w * |target - (R source + t)|^2`.
pub fn alignment_residual(
    source: &PointCloud,
    target: &PointCloud,
    corr: &CorrespondenceSet,
    motion: &RigidMotion,
) -> f64 {
    corr.pairs
        .iter()
        .map(|c| {
            let r = target.points[c.target] - motion.transform_point(&source.points[c.source]);
            c.weight * r.norm_squared()
        })
        .sum()
}

/// Ratio below which the second singular value of the cross-covariance marks a
/// collinear (rank <= 1) configuration.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Weighted least-squares rigid motion mapping `source` onto `target` over the
/// given correspondences. The orthogonal factor is sign-corrected so the result
/// is always a proper rotation.
pub fn kabsch(source: &PointCloud, target: &PointCloud, corr: &CorrespondenceSet) -> Result<RigidMotion> {
    let total = corr.check(source.len(), target.len())?;
    if corr.len() < 3 {
        return Err(Error::RankDeficient(format!("{} correspondences, need 3", corr.len())));
    }

    let mut mu_s = Vector3::zeros();
    let mut mu_t = Vector3::zeros();
    for c in &corr.pairs {
        mu_s += c.weight * source.points[c.source];
        mu_t += c.weight * target.points[c.target];
    }
    mu_s /= total;
    mu_t /= total;

    let mut h = Matrix3::zeros();
    for c in &corr.pairs {
        let ds = source.points[c.source] - mu_s;
        let dt = target.points[c.target] - mu_t;
        h += c.weight * ds * dt.transpose();
    }

    let svd = SVD::new(h, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::RankDeficient("SVD did not converge".into())),
    };
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] < RANK_TOLERANCE * sv[0] {
        return Err(Error::RankDeficient(format!(
            "cross-covariance singular values {:e}, {:e}, {:e}",
            sv[0], sv[1], sv[2]
        )));
    }

    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let translation = mu_t - rotation * mu_s;
    Ok(RigidMotion { rotation, translation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn elemental(axis: usize, deg: f64) -> Matrix3<f64> {
        let (s, c) = deg.to_radians().sin_cos();
        match axis {
            0 => Matrix3::from_row_slice(&[1., 0., 0., 0., c, -s, 0., s, c]),
            1 => Matrix3::from_row_slice(&[c, 0., s, 0., 1., 0., -s, 0., c]),
            _ => Matrix3::from_row_slice(&[c, -s, 0., s, c, 0., 0., 0., 1.]),
        }
    }

    #[test]
    fn identity_from_zero_angles() {
        let m = RigidMotion::from_euler_deg([0.0; 3], [0.0; 3]).unwrap();
        assert_eq!(m, RigidMotion::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let m = RigidMotion::from_euler_deg([0.0, 0.0, 90.0], [0.0; 3]).unwrap();
        let p = m.transform_point(&Point::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(p, Point::new(0.0, 1.0, 0.0), epsilon = 1e-15);

        let shifted = RigidMotion::from_euler_deg([0.0, 0.0, 90.0], [1.0, 0.0, 0.0]).unwrap();
        let p = shifted.transform_point(&Point::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(p, Point::new(1.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn euler_matches_elemental_product() {
        let m = RigidMotion::from_euler_deg([10.0, 20.0, 30.0], [0.1, -0.2, 0.3]).unwrap();
        let expected = elemental(2, 30.0) * elemental(1, 20.0) * elemental(0, 10.0);
        assert_abs_diff_eq!(m.rotation, expected, epsilon = 1e-15);
        assert_eq!(m.translation, Vector3::new(0.1, -0.2, 0.3));
        let back = m.euler_deg();
        for (a, b) in back.iter().zip([10.0, 20.0, 30.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(RigidMotion::from_euler_deg([f64::NAN, 0.0, 0.0], [0.0; 3]).is_err());
        assert!(PointCloud::from_coords(&[[0.0, f64::INFINITY, 0.0]]).is_err());
        assert!(PointCloud::new(vec![]).is_err());
    }

    #[test]
    fn sampler_degenerate_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = RigidMotion::sample(&mut rng, Interval::point(0.0), Interval::point(0.0)).unwrap();
        assert_eq!(m, RigidMotion::identity());

        let a = RigidMotion::sample(
            &mut ChaCha8Rng::seed_from_u64(9),
            DEFAULT_ROTATION_RANGE_DEG,
            DEFAULT_TRANSLATION_RANGE,
        )
        .unwrap();
        let b = RigidMotion::sample(
            &mut ChaCha8Rng::seed_from_u64(9),
            DEFAULT_ROTATION_RANGE_DEG,
            DEFAULT_TRANSLATION_RANGE,
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(Interval::new(1.0, 0.0).is_err());
    }

    #[test]
    fn sampler_mean_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let m = RigidMotion::sample(&mut rng, DEFAULT_ROTATION_RANGE_DEG, DEFAULT_TRANSLATION_RANGE).unwrap();
            let e = m.euler_deg();
            for k in 0..3 {
                assert!((-1e-9..=45.0 + 1e-9).contains(&e[k]));
                assert!((-0.5..=0.5).contains(&m.translation[k]));
                sums[k] += e[k];
            }
        }
        for s in sums {
            assert!((s / n as f64 - 22.5).abs() < 1.0);
        }
    }

    #[test]
    fn group_laws() {
        let m = RigidMotion::from_euler_deg([12.0, -33.0, 71.0], [0.4, 0.1, -0.3]).unwrap();
        let id = RigidMotion::identity();
        assert_eq!(id.compose(&m), m);
        let mm = m.compose(&m.inverse());
        assert_abs_diff_eq!(mm.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(mm.translation, Vector3::zeros(), epsilon = 1e-12);
        let back = m.inverse().inverse();
        assert_abs_diff_eq!(back.rotation, m.rotation, epsilon = 1e-12);
        assert_abs_diff_eq!(back.translation, m.translation, epsilon = 1e-12);

        let q = RigidMotion::from_euler_deg([0.0, 0.0, 45.0], [0.0; 3]).unwrap();
        let half = RigidMotion::from_euler_deg([0.0, 0.0, 90.0], [0.0; 3]).unwrap();
        assert_abs_diff_eq!(q.compose(&q).rotation, half.rotation, epsilon = 1e-12);

        let cloud = PointCloud::from_coords(&[[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]]).unwrap();
        let round = m.apply(&m.inverse().apply(&cloud));
        for (a, b) in round.points().iter().zip(cloud.points()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_eq!(id.apply(&cloud), cloud);
    }

    #[test]
    fn small_angles_keep_precision() {
        let m = RigidMotion::from_euler_deg([0.0, 0.0, 1e-8_f64.to_degrees()], [0.0; 3]).unwrap();
        assert_abs_diff_eq!(m.rotation_angle(), 1e-8, epsilon = 1e-20);
        let half = RigidMotion::from_euler_deg([0.0, 180.0, 0.0], [0.0; 3]).unwrap();
        assert_abs_diff_eq!(half.rotation_angle(), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn kabsch_identity_and_collinear() {
        let cloud = PointCloud::from_coords(&[[0., 0., 0.], [1., 0., 0.], [0., 1., 0.], [0., 0., 1.]]).unwrap();
        let m = kabsch(&cloud, &cloud, &CorrespondenceSet::identity(4)).unwrap();
        assert_abs_diff_eq!(m.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.translation, Vector3::zeros(), epsilon = 1e-12);

        let line = PointCloud::from_coords(&[[0., 0., 0.], [1., 1., 1.], [2., 2., 2.], [5., 5., 5.]]).unwrap();
        assert!(matches!(
            kabsch(&line, &line, &CorrespondenceSet::identity(4)),
            Err(Error::RankDeficient(_))
        ));
        assert!(matches!(
            kabsch(&cloud, &cloud, &CorrespondenceSet::from_pairs([(0, 0), (1, 9), (2, 2)])),
            Err(Error::InvalidArgument(_))
        ));
    }
}
