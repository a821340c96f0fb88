//! Scenario runner: paired trials of several registration pipelines on the same
//! corrupted source/target pairs, aggregated into a persistent report.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "target-low-density"
//! trials = 20
//! base_seed = 7
//!
//! [input]                # or: path = "chair.off"
//! shape = "sphere-cap"   # or: shapes = ["torus", "box"], cycled per trial
//! points = 2048
//!
//! [noise]                # any corruption variant, default none
//! kind = "subsample"
//! count = 1024
//! applied_to = "target"
//!
//! [transform]            # defaults shown
//! rotation_deg = { lo = 0.0, hi = 45.0 }
//! translation = { lo = -0.5, hi = 0.5 }
//!
//! [[pipelines]]          # every registration config field is addressable
//! metric = "mahalanobis"
//! descriptor = "eigen"
//! k = 20
//! ```
//!
//! Trial `t` draws everything from a stream seeded with `base_seed + t`:
//! the synthetic cloud, the ground-truth motion, then the corruption. Errors
//! are always scored on the uncorrupted, full-resolution clouds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corruption::{corrupt_indexed, NoiseSpec};
use crate::error::{Error, Result};
use crate::evaluation::{pose_error, set_distance, PoseError, SetDistance};
use crate::geometry::{Interval, PointCloud, RigidMotion, DEFAULT_ROTATION_RANGE_DEG, DEFAULT_TRANSLATION_RANGE};
use crate::io::read_cloud;
use crate::registration::{register, RegistrationConfig};
use crate::shapes::{generate, Shape};

pub const REPORT_SCHEMA: &str = "statlens.report/1";
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_SUCCESS_DEG: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    File {
        path: PathBuf,
    },
    Synthetic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<Shape>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        shapes: Vec<Shape>,
        points: usize,
    },
}

impl InputSpec {
    pub fn shape(shape: Shape, points: usize) -> Self {
        InputSpec::Synthetic {
            shape: Some(shape),
            shapes: Vec::new(),
            points,
        }
    }

    fn families(&self) -> Vec<Shape> {
        match self {
            InputSpec::File { .. } => Vec::new(),
            InputSpec::Synthetic { shape, shapes, .. } => shape.iter().copied().chain(shapes.iter().copied()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformRanges {
    pub rotation_deg: Interval,
    pub translation: Interval,
}

impl Default for TransformRanges {
    fn default() -> Self {
        Self {
            rotation_deg: DEFAULT_ROTATION_RANGE_DEG,
            translation: DEFAULT_TRANSLATION_RANGE,
        }
    }
}

impl TransformRanges {
    pub fn identity() -> Self {
        Self {
            rotation_deg: Interval::point(0.0),
            translation: Interval::point(0.0),
        }
    }
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_success() -> f64 {
    DEFAULT_SUCCESS_DEG
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Geodesic rotation error under which a trial counts as a success, degrees.
    #[serde(default = "default_success")]
    pub success_threshold_deg: f64,
    pub input: InputSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub transform: TransformRanges,
    pub pipelines: Vec<RegistrationConfig>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s = Self::from_toml(&text)?;
        // relative dataset paths are resolved against the scenario file
        if let InputSpec::File { path: data } = &mut s.input {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.pipelines.is_empty() {
            return Err(Error::Config("at least one pipeline is required".into()));
        }
        if let InputSpec::Synthetic { points, .. } = &self.input {
            if self.input.families().is_empty() {
                return Err(Error::Config("synthetic input needs `shape` or `shapes`".into()));
            }
            if *points == 0 {
                return Err(Error::Config("synthetic input needs points >= 1".into()));
            }
        }
        self.noise.validate()?;
        self.transform.rotation_deg.validate()?;
        self.transform.translation.validate()?;
        for p in &self.pipelines {
            p.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form.
    pub fn config_hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub pose: Option<PoseError>,
    pub set: Option<SetDistance>,
    pub iterations: usize,
    pub success: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub shape: Option<Shape>,
    pub truth_euler_deg: [f64; 3],
    pub truth_translation: [f64; 3],
    pub source_points: usize,
    pub target_points: usize,
    /// One entry per pipeline, in scenario order.
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stddev: f64,
    pub count: usize,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                stddev: f64::NAN,
                count: 0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            stddev: var.sqrt(),
            count: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub pipeline: String,
    pub config: RegistrationConfig,
    pub trials: usize,
    pub failures: usize,
    pub success_rate: f64,
    /// Keyed by statistic name: rmse_r_deg, rmse_t, geodesic_r_deg, chamfer, hausdorff, iterations.
    pub stats: BTreeMap<String, Summary>,
    #[serde(skip)]
    pub wall_seconds: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub euler_order: String,
    pub gaussian_sigma: String,
    pub covariance: String,
    pub chamfer: String,
    pub success_threshold_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub toolkit_version: String,
    pub scenario: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub trials: usize,
    pub noise: String,
    pub conventions: Conventions,
    pub cells: Vec<Cell>,
    pub records: Vec<TrialRecord>,
}

fn run_pipeline(
    cfg: &RegistrationConfig,
    source: &PointCloud,
    target: &PointCloud,
    full_source: &PointCloud,
    full_target: &PointCloud,
    truth: &RigidMotion,
    threshold: f64,
) -> TrialOutcome {
    let start = Instant::now();
    let result = register(source, target, cfg);
    let wall_seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(r) => {
            let pose = pose_error(&r.motion, truth);
            let set = set_distance(&r.motion.apply(full_source), full_target);
            TrialOutcome {
                pose: Some(pose),
                set: Some(set),
                iterations: r.iterations,
                success: pose.geodesic_r_deg < threshold,
                error: None,
                wall_seconds,
            }
        }
        Err(e) => TrialOutcome {
            pose: None,
            set: None,
            iterations: 0,
            success: false,
            error: Some(e.to_string()),
            wall_seconds,
        },
    }
}

fn run_trial(s: &Scenario, trial: usize, file_cloud: Option<&PointCloud>) -> Result<TrialRecord> {
    let seed = s.base_seed.wrapping_add(trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (source, shape) = match (&s.input, file_cloud) {
        (_, Some(c)) => (c.clone(), None),
        (InputSpec::Synthetic { points, .. }, None) => {
            let families = s.input.families();
            let shape = families[trial % families.len()];
            (generate(shape, *points, &mut rng)?.cloud, Some(shape))
        }
        (InputSpec::File { .. }, None) => unreachable!("file input is loaded up front"),
    };
    let truth = RigidMotion::sample(&mut rng, s.transform.rotation_deg, s.transform.translation)?;
    let target = truth.apply(&source);
    let pair = corrupt_indexed(&source, &target, &s.noise, &mut rng)?;

    let outcomes = s
        .pipelines
        .iter()
        .map(|cfg| run_pipeline(cfg, &pair.source, &pair.target, &source, &target, &truth, s.success_threshold_deg))
        .collect();
    Ok(TrialRecord {
        trial,
        seed,
        shape,
        truth_euler_deg: truth.euler_deg(),
        truth_translation: truth.translation.into(),
        source_points: pair.source.len(),
        target_points: pair.target.len(),
        outcomes,
    })
}

/// Runs every trial (concurrently) and every pipeline on each trial's frozen
/// pair. Pipeline failures are counted per cell; input or corruption errors
/// abort the run.
pub fn run_scenario(s: &Scenario) -> Result<BenchmarkReport> {
    s.validate()?;
    let file_cloud = match &s.input {
        InputSpec::File { path } => Some(read_cloud(path)?),
        InputSpec::Synthetic { .. } => None,
    };
    let records = (0..s.trials)
        .into_par_iter()
        .map(|t| run_trial(s, t, file_cloud.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let cells = s
        .pipelines
        .iter()
        .enumerate()
        .map(|(p, cfg)| {
            let outcomes: Vec<&TrialOutcome> = records.iter().map(|r| &r.outcomes[p]).collect();
            let ok: Vec<&TrialOutcome> = outcomes.iter().copied().filter(|o| o.error.is_none()).collect();
            let collect = |f: &dyn Fn(&TrialOutcome) -> f64| Summary::of(&ok.iter().map(|o| f(o)).collect::<Vec<_>>());
            let mut stats = BTreeMap::new();
            stats.insert("rmse_r_deg".to_string(), collect(&|o| o.pose.unwrap().rmse_r_deg));
            stats.insert("rmse_t".to_string(), collect(&|o| o.pose.unwrap().rmse_t));
            stats.insert("geodesic_r_deg".to_string(), collect(&|o| o.pose.unwrap().geodesic_r_deg));
            stats.insert("chamfer".to_string(), collect(&|o| o.set.unwrap().chamfer));
            stats.insert("hausdorff".to_string(), collect(&|o| o.set.unwrap().hausdorff));
            stats.insert("iterations".to_string(), collect(&|o| o.iterations as f64));
            Cell {
                pipeline: cfg.label(),
                config: cfg.clone(),
                trials: outcomes.len(),
                failures: outcomes.len() - ok.len(),
                success_rate: outcomes.iter().filter(|o| o.success).count() as f64 / outcomes.len() as f64,
                stats,
                wall_seconds: Summary::of(&outcomes.iter().map(|o| o.wall_seconds).collect::<Vec<_>>()),
            }
        })
        .collect();

    Ok(BenchmarkReport {
        schema: REPORT_SCHEMA.to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: s.name.clone(),
        config_hash: s.config_hash(),
        base_seed: s.base_seed,
        seeds: records.iter().map(|r| r.seed).collect(),
        trials: s.trials,
        noise: s.noise.to_string(),
        conventions: Conventions {
            euler_order: "R = Rz(gamma) Ry(beta) Rx(alpha), angles in degrees".into(),
            gaussian_sigma: "standard deviation".into(),
            covariance: "one population covariance per cloud with diagonal bias".into(),
            chamfer: "sum of the two directed mean squared nearest-neighbor distances".into(),
            success_threshold_deg: s.success_threshold_deg,
        },
        cells,
        records,
    })
}

impl BenchmarkReport {
    pub fn cell(&self, pipeline: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.pipeline == pipeline)
    }

    /// Machine-readable report. Wall times are excluded so that identical
    /// scenarios yield identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// `scenario,pipeline,statistic,mean,stddev,count`, one row per statistic.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,pipeline,statistic,mean,stddev,count\n");
        for c in &self.cells {
            for (name, s) in &c.stats {
                let _ = writeln!(out, "{},{},{},{},{},{}", self.scenario, c.pipeline, name, s.mean, s.stddev, s.count);
            }
            let _ = writeln!(out, "{},{},success_rate,{},0,{}", self.scenario, c.pipeline, c.success_rate, c.trials);
            let _ = writeln!(out, "{},{},failures,{},0,{}", self.scenario, c.pipeline, c.failures, c.trials);
        }
        out
    }

    /// Wall-clock timings per pipeline, kept apart from the deterministic files.
    pub fn timings_csv(&self) -> String {
        let mut out = String::from("scenario,pipeline,mean_wall_seconds,stddev_wall_seconds,trials\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.scenario, c.pipeline, c.wall_seconds.mean, c.wall_seconds.stddev, c.wall_seconds.count
            );
        }
        out
    }

    /// Writes `report.json`, `report.csv` and `timings.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |path: PathBuf| move |source| Error::Io { path, source };
        fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
        for (name, body) in [
            ("report.json", self.to_json()),
            ("report.csv", self.to_csv()),
            ("timings.csv", self.timings_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io(path.clone()))?;
        }
        Ok(())
    }
}
