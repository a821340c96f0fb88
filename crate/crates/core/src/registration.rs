//! Correspondence-and-solve registration loops.
//!
//! Every pipeline alternates between building correspondences on the current
//! estimate and solving for the rigid motion in closed form with [`kabsch`].
//! Point-ICP matches raw coordinates; the descriptor pipelines match per-point
//! features computed over a neighbor graph of the configured metric.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::{edgeconv_features, eigen_features, Aggregation, DescriptorSet, EdgeConvConfig};
use crate::error::{Error, Result};
use crate::geometry::{kabsch, Correspondence, CorrespondenceSet, Point, PointCloud, RigidMotion};
use crate::neighborhood::{build_graph, MetricTag, DEFAULT_K, DEFAULT_K_BASE};
use crate::statistics::{euclidean_squared, DEFAULT_REGULARIZER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Edgeconv,
    Eigen,
    /// Raw coordinates: classical point-to-point ICP.
    None,
}

impl DescriptorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DescriptorKind::Edgeconv => "edgeconv",
            DescriptorKind::Eigen => "eigen",
            DescriptorKind::None => "none",
        }
    }
}

impl std::str::FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edgeconv" => Ok(DescriptorKind::Edgeconv),
            "eigen" => Ok(DescriptorKind::Eigen),
            "none" => Ok(DescriptorKind::None),
            other => Err(Error::invalid(format!("unknown descriptor '{other}'"))),
        }
    }
}

/// Starting estimate of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    Identity,
    /// Aligns centroids and principal axes; of the four proper sign choices the
    /// one with the smallest trimmed nearest-neighbor residual wins.
    #[default]
    PrincipalAxes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationConfig {
    pub metric: MetricTag,
    pub descriptor: DescriptorKind,
    pub k: usize,
    /// Base Euclidean graph size for geodesic neighborhoods.
    pub k_base: usize,
    pub max_iters: usize,
    /// Radians for the rotation increment; model units for the translation increment.
    pub convergence_tol: f64,
    pub trim_fraction: f64,
    pub seed: u64,
    pub regularizer: f64,
    pub init: Initialization,
    /// Keep only mutually nearest descriptor pairs.
    pub mutual: bool,
    pub width: usize,
    pub layers: usize,
    pub aggregation: Aggregation,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            metric: MetricTag::Euclidean,
            descriptor: DescriptorKind::None,
            k: DEFAULT_K,
            k_base: DEFAULT_K_BASE,
            max_iters: 30,
            convergence_tol: 1e-4,
            trim_fraction: 0.3,
            seed: 0,
            regularizer: DEFAULT_REGULARIZER,
            init: Initialization::PrincipalAxes,
            mutual: false,
            width: crate::descriptors::DEFAULT_WIDTH,
            layers: 1,
            aggregation: Aggregation::Max,
        }
    }
}

impl RegistrationConfig {
    pub fn point_icp() -> Self {
        Self::default()
    }

    pub fn pipeline(metric: MetricTag, descriptor: DescriptorKind) -> Self {
        Self {
            metric,
            descriptor,
            ..Self::default()
        }
    }

    /// Short label such as `mahalanobis-eigen` or `icp`.
    pub fn label(&self) -> String {
        match self.descriptor {
            DescriptorKind::None => "icp".to_string(),
            d => format!("{}-{}", self.metric, d.as_str()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return Err(Error::invalid(format!("trim_fraction must be in [0, 1), got {}", self.trim_fraction)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return Err(Error::invalid("convergence_tol must be a non-negative number"));
        }
        if self.descriptor != DescriptorKind::None && self.k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        Ok(())
    }

    fn edgeconv(&self) -> EdgeConvConfig {
        EdgeConvConfig {
            layers: self.layers,
            width: self.width,
            aggregation: self.aggregation,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    /// Maps the original source onto the target frame.
    pub motion: RigidMotion,
    pub iterations: usize,
    /// Mean squared distance over the kept pairs, measured right after each update.
    pub per_iteration_residuals: Vec<f64>,
    pub correspondences_final: CorrespondenceSet,
    pub converged: bool,
}

fn trim_count(n: usize, trim_fraction: f64) -> usize {
    ((trim_fraction * n as f64) + 1e-9).floor() as usize
}

/// Keeps the `n - floor(trim * n)` pairs of smallest cost (ties to the lower
/// source index), returned in source order.
fn trim_pairs(mut scored: Vec<(f64, Correspondence)>, trim_fraction: f64) -> Result<CorrespondenceSet> {
    let drop = trim_count(scored.len(), trim_fraction);
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.source.cmp(&b.1.source)));
    scored.truncate(scored.len() - drop);
    if scored.is_empty() {
        return Err(Error::NoCorrespondence);
    }
    scored.sort_by_key(|(_, c)| c.source);
    Ok(CorrespondenceSet::new(scored.into_iter().map(|(_, c)| c).collect()))
}

/// Squared feature distance under which two candidates count as the same
/// descriptor. Points sharing one neighbor set get such near-copies.
const FEATURE_TIE: f64 = 1e-24;

/// Nearest candidate by feature distance. Near-exact ties go to the candidate
/// spatially closest to `at` when positions are given, else to the lower index.
fn nearest(query: &[f64], candidates: &[Vec<f64>], at: Option<(&Point, &[Point])>) -> (usize, f64) {
    let dist: Vec<f64> = candidates
        .iter()
        .map(|c| query.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let mut best = (0, f64::INFINITY);
    for (j, &d) in dist.iter().enumerate() {
        if d < best.1 {
            best = (j, d);
        }
    }
    if let Some((p, positions)) = at {
        let mut closest = f64::INFINITY;
        for (j, &d) in dist.iter().enumerate() {
            if d <= best.1 + FEATURE_TIE {
                let s = euclidean_squared(p, &positions[j]);
                if s < closest {
                    closest = s;
                    best.0 = j;
                }
            }
        }
        best.1 = dist[best.0];
    }
    best
}

/// Pairs each source descriptor with its nearest target descriptor, then drops
/// the `trim_fraction` of pairs with the largest feature distance.
pub fn match_descriptors(
    source: &DescriptorSet,
    target: &DescriptorSet,
    trim_fraction: f64,
) -> Result<CorrespondenceSet> {
    match_descriptors_with(source, target, trim_fraction, false)
}

pub fn match_descriptors_with(
    source: &DescriptorSet,
    target: &DescriptorSet,
    trim_fraction: f64,
    mutual: bool,
) -> Result<CorrespondenceSet> {
    match_inner(source, target, trim_fraction, mutual, None)
}

fn match_inner(
    source: &DescriptorSet,
    target: &DescriptorSet,
    trim_fraction: f64,
    mutual: bool,
    positions: Option<(&[Point], &[Point])>,
) -> Result<CorrespondenceSet> {
    if source.dim != target.dim {
        return Err(Error::invalid(format!(
            "descriptor dimensions differ: {} vs {}",
            source.dim, target.dim
        )));
    }
    if !(0.0..1.0).contains(&trim_fraction) {
        return Err(Error::invalid(format!("trim_fraction must be in [0, 1), got {trim_fraction}")));
    }
    if target.is_empty() {
        return Err(Error::NoCorrespondence);
    }
    let forward: Vec<(usize, f64)> = (0..source.len())
        .into_par_iter()
        .map(|i| nearest(&source.vectors[i], &target.vectors, positions.map(|(s, t)| (&s[i], t))))
        .collect();
    let backward: Option<Vec<usize>> = mutual.then(|| {
        (0..target.len())
            .into_par_iter()
            .map(|j| nearest(&target.vectors[j], &source.vectors, positions.map(|(s, t)| (&t[j], s))).0)
            .collect()
    });
    let scored = forward
        .into_iter()
        .enumerate()
        .filter(|&(i, (j, _))| backward.as_ref().is_none_or(|b| b[j] == i))
        .map(|(i, (j, d))| {
            (
                d,
                Correspondence {
                    source: i,
                    target: j,
                    weight: 1.0,
                },
            )
        })
        .collect();
    trim_pairs(scored, trim_fraction)
}

fn coordinates(cloud: &PointCloud) -> Vec<Vec<f64>> {
    cloud.points().iter().map(|p| vec![p.x, p.y, p.z]).collect()
}

/// Nearest target point for each source point, trimmed.
fn closest_points(source: &PointCloud, target: &PointCloud, trim_fraction: f64) -> Result<CorrespondenceSet> {
    let tp = target.points();
    let scored = source
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut best = (0, f64::INFINITY);
            for (j, q) in tp.iter().enumerate() {
                let d = euclidean_squared(p, q);
                if d < best.1 {
                    best = (j, d);
                }
            }
            (
                best.1,
                Correspondence {
                    source: i,
                    target: best.0,
                    weight: 1.0,
                },
            )
        })
        .collect();
    trim_pairs(scored, trim_fraction)
}

fn mean_pair_residual(source: &PointCloud, target: &PointCloud, corr: &CorrespondenceSet, motion: &RigidMotion) -> f64 {
    crate::geometry::alignment_residual(source, target, corr, motion) / corr.len() as f64
}

fn principal_frame(cloud: &PointCloud) -> (Vector3<f64>, Matrix3<f64>) {
    let mean = cloud.centroid();
    let mut cov = Matrix3::zeros();
    for p in cloud.points() {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / cloud.len() as f64);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis = Matrix3::from_columns(&[
        eig.eigenvectors.column(order[0]).into_owned(),
        eig.eigenvectors.column(order[1]).into_owned(),
        eig.eigenvectors.column(order[2]).into_owned(),
    ]);
    if basis.determinant() < 0.0 {
        basis.set_column(2, &(-basis.column(2)));
    }
    (mean, basis)
}

/// Coarse alignment of centroids and principal axes.
pub fn principal_axes_alignment(source: &PointCloud, target: &PointCloud, trim_fraction: f64) -> Result<RigidMotion> {
    let (mu_s, basis_s) = principal_frame(source);
    let (mu_t, basis_t) = principal_frame(target);
    let signs = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let mut best: Option<(f64, RigidMotion)> = None;
    for s in signs {
        let rotation = basis_t * Matrix3::from_diagonal(&Vector3::from(s)) * basis_s.transpose();
        let motion = RigidMotion {
            rotation,
            translation: mu_t - rotation * mu_s,
        };
        let moved = motion.apply(source);
        let corr = closest_points(&moved, target, trim_fraction)?;
        let score = mean_pair_residual(&moved, target, &corr, &RigidMotion::identity());
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, motion));
        }
    }
    Ok(best.map(|(_, m)| m).expect("four candidates"))
}

fn descriptors_for(cloud: &PointCloud, cfg: &RegistrationConfig) -> Result<DescriptorSet> {
    if cfg.descriptor == DescriptorKind::None {
        return DescriptorSet::from_vectors(coordinates(cloud), cfg.metric);
    }
    let graph = build_graph(cloud, cfg.metric, cfg.k, cfg.k_base, cfg.regularizer)?;
    match cfg.descriptor {
        DescriptorKind::Eigen => eigen_features(cloud, &graph),
        DescriptorKind::Edgeconv => edgeconv_features(cloud, &graph, &cfg.edgeconv()),
        DescriptorKind::None => unreachable!(),
    }
}

/// Estimates the rigid motion taking `source` onto `target`.
///
/// Each round rebuilds correspondences on the currently moved source (nearest
/// target point for point-ICP, nearest descriptor otherwise), solves for an
/// increment in closed form and folds it into the running estimate. The loop
/// ends once both the rotation angle and the translation norm of the
/// increment fall below `convergence_tol`, or after `max_iters` rounds.
pub fn register(source: &PointCloud, target: &PointCloud, cfg: &RegistrationConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    if cfg.descriptor != DescriptorKind::None {
        let needed = cfg.k + 1;
        if source.len() < needed || target.len() < needed {
            return Err(Error::invalid(format!(
                "clouds need at least k + 1 = {needed} points (source {}, target {})",
                source.len(),
                target.len()
            )));
        }
    }

    let mut motion = match cfg.init {
        Initialization::Identity => RigidMotion::identity(),
        Initialization::PrincipalAxes => principal_axes_alignment(source, target, cfg.trim_fraction)?,
    };
    let target_desc = match cfg.descriptor {
        DescriptorKind::None => None,
        _ => Some(descriptors_for(target, cfg)?),
    };

    let mut residuals = Vec::with_capacity(cfg.max_iters);
    let mut corr = CorrespondenceSet::default();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let moved = motion.apply(source);
        corr = match &target_desc {
            None => closest_points(&moved, target, cfg.trim_fraction)?,
            Some(td) => {
                let sd = descriptors_for(&moved, cfg)?;
                match_inner(&sd, td, cfg.trim_fraction, cfg.mutual, Some((moved.points(), target.points())))?
            }
        };
        let step = kabsch(&moved, target, &corr)?;
        residuals.push(mean_pair_residual(&moved, target, &corr, &step));
        motion = step.compose(&motion);
        if step.rotation_angle() < cfg.convergence_tol && step.translation.norm() < cfg.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(RegistrationResult {
        motion,
        iterations: residuals.len(),
        per_iteration_residuals: residuals,
        correspondences_final: corr,
        converged,
    })
}
