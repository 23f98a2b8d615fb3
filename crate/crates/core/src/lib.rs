//! Intrinsic-dimension estimation for high-dimensional point clouds, with
//! the layer-wise curve analysis used to compare how models represent a
//! task under in-context learning and fine-tuning.
//!
//! The pipeline, bottom up:
//!
//! * [`tensor_io`] reads and writes IDT1 cloud files and run manifests;
//! * [`neighbors`] does exact k-nearest-neighbor search;
//! * [`estimators`] turns neighbor distances into TwoNN and MLE estimates;
//! * [`analysis`] stacks per-layer estimates into curves and compares runs;
//! * [`synthetic`] generates clouds of known dimension for checking all of the above.

pub mod analysis;
#[cfg(feature = "cli")]
pub mod cli;
pub mod cloud;
pub mod error;
pub mod estimators;
pub mod neighbors;
mod par;
pub mod synthetic;
pub mod tensor_io;

pub use analysis::{
    build_curve, compare_paradigms, normalized_auc, pearson, sft_trajectory, shot_sweep,
    shot_sweep_values, AucSummary, ComparisonReport, FiveNumber, IdCurve, LayerEstimate, RunKey,
    SftCheckpoint, SftTrajectory, ShotSweep,
};
pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use estimators::{
    mle, stability, twonn, twonn_fit, Estimator, EstimatorKind, IdEstimate, StabilityReport,
};
pub use neighbors::{dedup, knn, NeighborTable};
pub use par::with_threads;
pub use synthetic::{generate, orthogonal_map, ManifoldKind, ManifoldSpec, OrthogonalMap};
pub use tensor_io::{read_cloud, read_manifest, write_cloud, Paradigm, RunManifest};
