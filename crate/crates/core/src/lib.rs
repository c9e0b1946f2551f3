//! Structural-interpretation benchmarking for scientific-ML models.
//!
//! The toolkit evaluates externally produced model predictions over three
//! workload families (molecular force fields, jet tagging, precipitation
//! nowcasting). It partitions problem spaces into slices, computes domain
//! metrics that retain per-sample detail, and traces aggregate errors back
//! to data slices via metric correlation.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`data`]: domain types for the three workload families
//! - [`io`]: dataset, prediction, and report file formats
//! - [`sampling`]: problem-space partitioning (windows, subsets, bins)
//! - [`transforms`]: physically informed projections and perturbations
//! - [`metrics`]: metric kernels with per-sample breakdowns
//! - [`synth`]: seeded toy generators and trivially correct toy predictors
//! - [`harness`]: declarative sweep plans, the external-predictor protocol,
//!   error tracing, and report rendering

pub mod data;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod synth;
pub mod transforms;

pub use data::{
    Grid, JetDataset, JetEvent, MolecularFrame, PrecipEvent, Prediction, PredictionSet, Trajectory,
};
pub use report::{Aggregates, Histogram, MetricReport};
