//! Global covariance estimation and the Mahalanobis kernel.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

/// Diagonal bias added to every estimated covariance unless overridden.
pub const DEFAULT_REGULARIZER: f64 = 1e-5;

/// Relative eigenvalue threshold under which an unregularized covariance is
/// treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// A 3x3 covariance with its inverse.
///
/// `covariance` already includes `regularizer * I`. The inverse is built from a
/// symmetric eigendecomposition whose eigenvalues are floored at `regularizer`,
/// so the model stays positive definite even after cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub covariance: Matrix3<f64>,
    pub inverse: Matrix3<f64>,
    pub regularizer: f64,
    pub sample_count: usize,
    pub mean: Point,
}

impl CovarianceModel {
    /// Unit covariance without bias; distances under it are Euclidean.
    pub fn identity() -> Self {
        Self {
            covariance: Matrix3::identity(),
            inverse: Matrix3::identity(),
            regularizer: 0.0,
            sample_count: 0,
            mean: Point::zeros(),
        }
    }

    /// Wraps an explicit symmetric positive-definite covariance.
    pub fn from_covariance(covariance: Matrix3<f64>) -> Result<Self> {
        if (covariance - covariance.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("covariance must be symmetric"));
        }
        let inverse = floored_inverse(&covariance, 0.0)?;
        Ok(Self {
            covariance,
            inverse,
            regularizer: 0.0,
            sample_count: 0,
            mean: Point::zeros(),
        })
    }

    /// Eigenvalues of the stored (regularized) covariance, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.covariance).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2]]
    }

    /// `dᵀ C⁻¹ d` with `d = p - q`.
    #[inline]
    pub fn squared_distance(&self, p: &Point, q: &Point) -> f64 {
        let d = p - q;
        quadratic_form(&self.inverse, &d)
    }

    #[inline]
    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.squared_distance(p, q).sqrt()
    }
}

/// `dᵀ A d`, summed in the same order as `d.dot(d)` so that `A = I` reproduces
/// the Euclidean squared norm bit for bit.
#[inline]
pub(crate) fn quadratic_form(a: &Matrix3<f64>, d: &Vector3<f64>) -> f64 {
    let v0 = a[(0, 0)] * d[0] + a[(0, 1)] * d[1] + a[(0, 2)] * d[2];
    let v1 = a[(1, 0)] * d[0] + a[(1, 1)] * d[1] + a[(1, 2)] * d[2];
    let v2 = a[(2, 0)] * d[0] + a[(2, 1)] * d[1] + a[(2, 2)] * d[2];
    (d[0] * v0 + d[1] * v1 + d[2] * v2).max(0.0)
}

#[inline]
pub(crate) fn euclidean_squared(p: &Point, q: &Point) -> f64 {
    let d = p - q;
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn floored_inverse(c: &Matrix3<f64>, floor: f64) -> Result<Matrix3<f64>> {
    let eig = SymmetricEigen::new(*c);
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if floor <= 0.0 && (!(max > 0.0) || min <= SINGULAR_RATIO * max) {
        return Err(Error::SingularCovariance(min));
    }
    let inv_diag = eig.eigenvalues.map(|l| 1.0 / l.max(floor));
    let inv = eig.eigenvectors * Matrix3::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();
    Ok(0.5 * (inv + inv.transpose()))
}

/// Population covariance `(1/M) Σ (x - μ)(x - μ)ᵀ + regularizer * I`.
pub fn estimate_covariance(cloud: &PointCloud, regularizer: f64) -> Result<CovarianceModel> {
    if !(regularizer.is_finite() && regularizer >= 0.0) {
        return Err(Error::invalid(format!("regularizer must be >= 0, got {regularizer}")));
    }
    let mean = cloud.centroid();
    let mut c = Matrix3::zeros();
    for p in cloud.points() {
        let d = p - mean;
        c += d * d.transpose();
    }
    c /= cloud.len() as f64;
    c = 0.5 * (c + c.transpose());
    c += Matrix3::identity() * regularizer;
    let inverse = floored_inverse(&c, regularizer)?;
    Ok(CovarianceModel {
        covariance: c,
        inverse,
        regularizer,
        sample_count: cloud.len(),
        mean,
    })
}

/// Mahalanobis distance `sqrt((p - q)ᵀ C⁻¹ (p - q))`.
pub fn mahalanobis_distance(p: &Point, q: &Point, model: &CovarianceModel) -> f64 {
    model.distance(p, q)
}
