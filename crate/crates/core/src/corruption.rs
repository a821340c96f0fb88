//! Noise and density perturbations applied to source/target pairs.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

pub const DEFAULT_SIGMA: f64 = 0.01;
pub const DEFAULT_CLIP: f64 = 0.05;
pub const DEFAULT_KEEP_PROB: f64 = 0.7;
pub const DEFAULT_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Source,
    Target,
    #[default]
    Both,
}

impl Side {
    fn hits_source(self) -> bool {
        matches!(self, Side::Source | Side::Both)
    }

    fn hits_target(self) -> bool {
        matches!(self, Side::Target | Side::Both)
    }

    fn as_str(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
            Side::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseVariant {
    /// Per-coordinate normal noise with standard deviation `sigma`, clamped to `[-clip, clip]`.
    Gaussian { sigma: f64, clip: f64 },
    /// Independent per-point retention with probability `keep_prob`.
    Bernoulli { keep_prob: f64 },
    /// Source and target keep disjoint random subsets, each a `ratio` fraction.
    Sampling { ratio: f64 },
    /// A random permutation split in two halves, one per cloud.
    ZeroIntersection,
    /// `count` points drawn without replacement.
    Subsample { count: usize },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub variant: NoiseVariant,
    #[serde(default)]
    pub applied_to: Side,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            variant: NoiseVariant::None,
            applied_to: Side::Both,
        }
    }

    pub fn gaussian(sigma: f64, clip: f64) -> Self {
        Self {
            variant: NoiseVariant::Gaussian { sigma, clip },
            applied_to: Side::Both,
        }
    }

    pub fn on(mut self, side: Side) -> Self {
        self.applied_to = side;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.variant {
            NoiseVariant::Gaussian { sigma, clip } => sigma > 0.0 && sigma.is_finite() && clip >= 0.0 && clip.is_finite(),
            NoiseVariant::Bernoulli { keep_prob } => keep_prob > 0.0 && keep_prob <= 1.0,
            NoiseVariant::Sampling { ratio } => ratio > 0.0 && ratio <= 1.0,
            NoiseVariant::Subsample { count } => count >= 1,
            NoiseVariant::ZeroIntersection | NoiseVariant::None => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid noise parameters: {self}")))
        }
    }

    /// Whether the variant removes points (so scoring must go back to the full clouds).
    pub fn changes_density(&self) -> bool {
        !matches!(self.variant, NoiseVariant::Gaussian { .. } | NoiseVariant::None)
    }
}

/// `kind[:key=value,...]`, e.g. `gaussian:sigma=0.01,clip=0.05` or
/// `subsample:count=1024,to=target`.
impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut params = match self.variant {
            NoiseVariant::Gaussian { sigma, clip } => format!("gaussian:sigma={sigma},clip={clip}"),
            NoiseVariant::Bernoulli { keep_prob } => format!("bernoulli:keep_prob={keep_prob}"),
            NoiseVariant::Sampling { ratio } => format!("sampling:ratio={ratio}"),
            NoiseVariant::ZeroIntersection => "zero_intersection".to_string(),
            NoiseVariant::Subsample { count } => format!("subsample:count={count}"),
            NoiseVariant::None => "none".to_string(),
        };
        if self.applied_to != Side::Both {
            params.push(if params.contains(':') { ',' } else { ':' });
            params.push_str("to=");
            params.push_str(self.applied_to.as_str());
        }
        f.write_str(&params)
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut sigma = DEFAULT_SIGMA;
        let mut clip = DEFAULT_CLIP;
        let mut keep_prob = DEFAULT_KEEP_PROB;
        let mut ratio = DEFAULT_RATIO;
        let mut count = None;
        let mut applied_to = Side::Both;
        let bad = |what: &str| Error::invalid(format!("noise spec '{s}': {what}"));
        for kv in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<f64>().map_err(|_| bad(&format!("'{value}' is not a number")));
            match key {
                "sigma" => sigma = num()?,
                "clip" => clip = num()?,
                "keep_prob" | "p" => keep_prob = num()?,
                "ratio" => ratio = num()?,
                "count" | "n" => count = Some(value.parse::<usize>().map_err(|_| bad("count must be an integer"))?),
                "to" | "applied_to" => {
                    applied_to = match value {
                        "source" => Side::Source,
                        "target" => Side::Target,
                        "both" => Side::Both,
                        _ => return Err(bad("to must be source, target or both")),
                    }
                }
                _ => return Err(bad(&format!("unknown key '{key}'"))),
            }
        }
        let variant = match kind.trim() {
            "gaussian" => NoiseVariant::Gaussian { sigma, clip },
            "bernoulli" => NoiseVariant::Bernoulli { keep_prob },
            "sampling" => NoiseVariant::Sampling { ratio },
            "zero_intersection" | "zero-intersection" => NoiseVariant::ZeroIntersection,
            "subsample" => NoiseVariant::Subsample {
                count: count.ok_or_else(|| bad("subsample needs count"))?,
            },
            "none" => NoiseVariant::None,
            other => return Err(bad(&format!("unknown kind '{other}'"))),
        };
        let spec = NoiseSpec { variant, applied_to };
        spec.validate()?;
        Ok(spec)
    }
}

/// Corrupted clouds together with the original index of every surviving point.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedPair {
    pub source: PointCloud,
    pub target: PointCloud,
    pub source_indices: Vec<usize>,
    pub target_indices: Vec<usize>,
}

fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn jitter<R: Rng + ?Sized>(cloud: &PointCloud, normal: &Normal<f64>, clip: f64, rng: &mut R) -> Result<PointCloud> {
    let pts = cloud
        .points()
        .iter()
        .map(|p| p + Point::from([(); 3].map(|_| normal.sample(rng).clamp(-clip, clip))))
        .collect();
    let mut out = PointCloud::new(pts)?;
    out.id = cloud.id.clone();
    Ok(out)
}

fn bernoulli_keep<R: Rng + ?Sized>(n: usize, keep_prob: f64, rng: &mut R) -> Vec<usize> {
    loop {
        let kept: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < keep_prob).collect();
        if !kept.is_empty() {
            return kept;
        }
    }
}

fn choose<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Result<Vec<usize>> {
    if count > n {
        return Err(Error::invalid(format!("cannot subsample {count} points from {n}")));
    }
    let mut picked = index::sample(rng, n, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

fn same_length(source: &PointCloud, target: &PointCloud, what: &str) -> Result<usize> {
    if source.len() != target.len() {
        return Err(Error::invalid(format!(
            "{what} needs index-aligned clouds, got {} and {} points",
            source.len(),
            target.len()
        )));
    }
    Ok(source.len())
}

/// Applies `spec` and returns the perturbed clouds with their provenance.
/// Source-side draws are consumed before target-side draws.
pub fn corrupt_indexed<R: Rng + ?Sized>(
    source: &PointCloud,
    target: &PointCloud,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<CorruptedPair> {
    spec.validate()?;
    let side = spec.applied_to;
    let (src_idx, tgt_idx) = match spec.variant {
        NoiseVariant::None => (all(source.len()), all(target.len())),
        NoiseVariant::Gaussian { sigma, clip } => {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
            let s = if side.hits_source() { jitter(source, &normal, clip, rng)? } else { source.clone() };
            let t = if side.hits_target() { jitter(target, &normal, clip, rng)? } else { target.clone() };
            return Ok(CorruptedPair {
                source: s,
                target: t,
                source_indices: all(source.len()),
                target_indices: all(target.len()),
            });
        }
        NoiseVariant::Bernoulli { keep_prob } => {
            let s = if side.hits_source() { bernoulli_keep(source.len(), keep_prob, rng) } else { all(source.len()) };
            let t = if side.hits_target() { bernoulli_keep(target.len(), keep_prob, rng) } else { all(target.len()) };
            (s, t)
        }
        NoiseVariant::Subsample { count } => {
            let s = if side.hits_source() { choose(source.len(), count, rng)? } else { all(source.len()) };
            let t = if side.hits_target() { choose(target.len(), count, rng)? } else { all(target.len()) };
            (s, t)
        }
        NoiseVariant::Sampling { ratio } => {
            let n = same_length(source, target, "sampling")?;
            let want = ((ratio * n as f64).round() as usize).max(1);
            let s_count = want.min(n);
            let t_count = want.min(n - s_count);
            if t_count == 0 {
                return Err(Error::invalid(format!("sampling ratio {ratio} leaves no disjoint points for the target")));
            }
            let mut perm = all(n);
            perm.shuffle(rng);
            let mut s = perm[..s_count].to_vec();
            let mut t = perm[s_count..s_count + t_count].to_vec();
            s.sort_unstable();
            t.sort_unstable();
            (s, t)
        }
        NoiseVariant::ZeroIntersection => {
            let n = same_length(source, target, "zero_intersection")?;
            if n < 2 {
                return Err(Error::invalid("zero_intersection needs at least two points"));
            }
            let mut perm = all(n);
            perm.shuffle(rng);
            let (a, b) = perm.split_at(n / 2);
            let (mut s, mut t) = (a.to_vec(), b.to_vec());
            s.sort_unstable();
            t.sort_unstable();
            (s, t)
        }
    };
    Ok(CorruptedPair {
        source: source.select(&src_idx)?,
        target: target.select(&tgt_idx)?,
        source_indices: src_idx,
        target_indices: tgt_idx,
    })
}

pub fn corrupt<R: Rng + ?Sized>(
    source: &PointCloud,
    target: &PointCloud,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<(PointCloud, PointCloud)> {
    let pair = corrupt_indexed(source, target, spec, rng)?;
    Ok((pair.source, pair.target))
}
