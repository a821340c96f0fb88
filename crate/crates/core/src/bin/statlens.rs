use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use statlens::corruption::{corrupt, NoiseSpec, Side};
use statlens::descriptors::{cluster_purity, edgeconv_features, kmeans, labels_csv, EdgeConvConfig};
use statlens::harness::{run_scenario, Scenario};
use statlens::io::{read_cloud, read_labels, write_cloud, write_labels};
use statlens::neighborhood::{build_graph, DEFAULT_K, DEFAULT_K_BASE};
use statlens::shapes::{generate, Shape};
use statlens::statistics::DEFAULT_REGULARIZER;
use statlens::{register, DescriptorKind, Error, MetricTag, RegistrationConfig};

#[derive(Parser)]
#[command(name = "statlens", version, about = "Point-cloud registration with statistical neighborhoods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic fixture. two-planes also writes `<out>.labels`.
    Gen {
        #[arg(long)]
        shape: Shape,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corrupt a cloud. The input plays both source and target; `--out` gets the
    /// side the noise is applied to (the source when both).
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        /// e.g. `gaussian:sigma=0.01,clip=0.05` or `subsample:count=1024`
        #[arg(long)]
        noise: NoiseSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the other cloud of the corrupted pair.
        #[arg(long)]
        pair_out: Option<PathBuf>,
    },
    /// Register source onto target and write a JSON report plus the aligned source.
    Register {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = "euclidean")]
        metric: MetricTag,
        #[arg(long, default_value = "none")]
        descriptor: DescriptorKind,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        /// Defaults to `<report stem>.aligned.xyz` next to the report.
        #[arg(long)]
        aligned: Option<PathBuf>,
    },
    /// Per-point overlap of Euclidean and Mahalanobis neighbor sets.
    KnnCompare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Group labels; defaults to `<in>.labels` when that file exists.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// KMeans over edge-conv features computed on the chosen graph.
    Cluster {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "mahalanobis")]
        metric: MetricTag,
        #[arg(long = "K", default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario file and write report.json, report.csv and timings.csv.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn labels_path(cloud: &Path) -> PathBuf {
    let mut s = cloud.as_os_str().to_owned();
    s.push(".labels");
    PathBuf::from(s)
}

fn write_text(path: &Path, body: &str) -> statlens::Result<()> {
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Serialize)]
struct RegisterReport {
    source: PathBuf,
    target: PathBuf,
    config: RegistrationConfig,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    euler_deg: [f64; 3],
    iterations: usize,
    converged: bool,
    per_iteration_residuals: Vec<f64>,
    correspondences: Vec<(usize, usize)>,
    aligned: PathBuf,
}

fn run(cmd: Command) -> statlens::Result<()> {
    match cmd {
        Command::Gen { shape, n, seed, out } => {
            let sample = generate(shape, n, &mut ChaCha8Rng::seed_from_u64(seed))?;
            write_cloud(&out, &sample.cloud)?;
            if let Some(labels) = sample.labels {
                write_labels(&labels_path(&out), &labels)?;
            }
        }
        Command::Corrupt { input, noise, seed, out, pair_out } => {
            let cloud = read_cloud(&input)?;
            let (s, t) = corrupt(&cloud, &cloud, &noise, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let (main, other) = if noise.applied_to == Side::Target { (t, s) } else { (s, t) };
            write_cloud(&out, &main)?;
            if let Some(p) = pair_out {
                write_cloud(&p, &other)?;
            }
        }
        Command::Register { source, target, metric, descriptor, k, seed, report, aligned } => {
            let src = read_cloud(&source)?;
            let tgt = read_cloud(&target)?;
            let cfg = RegistrationConfig {
                metric,
                descriptor,
                k,
                k_base: DEFAULT_K_BASE,
                seed,
                ..RegistrationConfig::default()
            };
            let result = register(&src, &tgt, &cfg)?;
            let aligned = aligned.unwrap_or_else(|| {
                let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                report.with_file_name(format!("{stem}.aligned.xyz"))
            });
            write_cloud(&aligned, &result.motion.apply(&src))?;
            let m = &result.motion;
            let body = RegisterReport {
                source,
                target,
                config: cfg,
                rotation: [0, 1, 2].map(|i| [0, 1, 2].map(|j| m.rotation[(i, j)])),
                translation: [m.translation.x, m.translation.y, m.translation.z],
                euler_deg: m.euler_deg(),
                iterations: result.iterations,
                converged: result.converged,
                per_iteration_residuals: result.per_iteration_residuals,
                correspondences: result.correspondences_final.pairs.iter().map(|c| (c.source, c.target)).collect(),
                aligned,
            };
            let json = serde_json::to_string_pretty(&body).expect("report serializes");
            write_text(&report, &(json + "\n"))?;
        }
        Command::KnnCompare { input, k, out, labels } => {
            let cloud = read_cloud(&input)?;
            let labels = match labels {
                Some(p) => Some(read_labels(&p)?),
                None if labels_path(&input).exists() => Some(read_labels(&labels_path(&input))?),
                None => None,
            };
            if let Some(l) = &labels {
                if l.len() != cloud.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{} labels for {} points",
                        l.len(),
                        cloud.len()
                    )));
                }
            }
            let e = build_graph(&cloud, MetricTag::Euclidean, k, k, DEFAULT_REGULARIZER)?;
            let m = build_graph(&cloud, MetricTag::Mahalanobis, k, k, DEFAULT_REGULARIZER)?;
            let overlap = e.overlap_fractions(&m);
            let mut csv = String::from("point_index,overlap");
            let same = labels.map(|l| (e.same_label_fractions(&l), m.same_label_fractions(&l)));
            if same.is_some() {
                csv.push_str(",euclidean_same_group,mahalanobis_same_group");
            }
            csv.push('\n');
            for (i, o) in overlap.iter().enumerate() {
                let _ = write!(csv, "{i},{o}");
                if let Some((se, sm)) = &same {
                    let _ = write!(csv, ",{},{}", se[i], sm[i]);
                }
                csv.push('\n');
            }
            write_text(&out, &csv)?;
        }
        Command::Cluster { input, metric, clusters, k, seed, out } => {
            let cloud = read_cloud(&input)?;
            let graph = build_graph(&cloud, metric, k, DEFAULT_K_BASE, DEFAULT_REGULARIZER)?;
            let features = edgeconv_features(&cloud, &graph, &EdgeConvConfig { seed, ..EdgeConvConfig::default() })?;
            let result = kmeans(&features, clusters, seed, 100, 1e-9)?;
            write_text(&out, &labels_csv(&cloud, &result.labels))?;
            if labels_path(&input).exists() {
                let truth = read_labels(&labels_path(&input))?;
                if truth.len() == cloud.len() {
                    eprintln!("purity {:.4}", cluster_purity(&result.labels, &truth));
                }
            }
        }
        Command::Bench { scenario, out } => {
            let s = Scenario::load(&scenario)?;
            let report = run_scenario(&s)?;
            report.write(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("statlens: {e}");
            match e {
                e if e.is_numerical() => ExitCode::from(3),
                Error::Io { .. } | Error::Parse { .. } | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
