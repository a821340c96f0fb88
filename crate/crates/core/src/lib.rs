//! Point-cloud registration toolkit built around Mahalanobis k-nearest-neighbor
//! graphs.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: point clouds, rigid motions and the weighted Kabsch solver.
//! - [`statistics`]: regularized covariance estimation and the Mahalanobis kernel.
//! - [`neighborhood`]: exact k-NN graphs (Euclidean, Mahalanobis, geodesic) and
//!   row-vectorized Floyd-Warshall.
//! - [`descriptors`]: seeded edge-convolution and eigenvalue descriptors, k-means.
//! - [`registration`]: point-ICP and descriptor-matching registration loops.
//! - [`corruption`] and [`evaluation`]: noise models and error metrics.
//! - [`harness`]: reproducible benchmark scenarios with JSON/CSV reports.
//! - [`io`] and [`shapes`]: text cloud formats and synthetic fixtures.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists them.

pub mod corruption;
pub mod descriptors;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod neighborhood;
pub mod registration;
pub mod shapes;
pub mod statistics;

pub use error::{Error, Result};
pub use geometry::{CorrespondenceSet, PointCloud, RigidMotion};
pub use neighborhood::{MetricTag, NeighborGraph};
pub use registration::{register, DescriptorKind, RegistrationConfig, RegistrationResult};
