//! Measure a few end-to-end network paths, predict summaries of the rest.
//!
//! Delay-like metrics are additive over links, so the vector of all
//! source-destination path metrics is `y = G x`, where `G` is the 0/1
//! routing matrix and `x` holds per-link values. This crate picks a small,
//! maximally informative subset of paths to measure (SVD of the
//! variance-weighted routing matrix followed by column-pivoted QR) and
//! predicts linear summaries `l^T y` of the full path set from the sampled
//! entries alone, via the estimated best linear predictor. On top of that
//! sit time-series analytics: prediction error curves, spike detection with
//! ROC sweeps, origin-group comparisons, and link-failure robustness sweeps.
//!
//! Module map:
//! * [`topology`]: graphs, deterministic shortest-path routing, routing matrices
//! * [`spectral`]: diagonal covariance models and eigenspectra of weighted matrices
//! * [`selection`]: which `k` paths to measure
//! * [`predictor`]: moment partitions, the linear predictor, error decompositions
//! * [`analytics`]: epoch-series studies built on the predictor
//! * [`data_io`]: series files, synthetic data, covariance estimation
//! * [`assets`]: the bundled Abilene backbone and a reference covariance

pub mod analytics;
pub mod assets;
pub mod data_io;
pub mod error;
mod numeric;
pub mod predictor;
pub mod selection;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};

pub use analytics::{
    compare_subnets, default_threshold_sweep, detect_spikes, error_curve, exp_smooth,
    robustness_sweep, roc_sweep, AnomalyEvent, KError, RobustnessSweep, RocPoint, SubnetComparison,
    VariantOutcome,
};
pub use data_io::{
    estimate_diag_covariance, generate_synthetic, generate_synthetic_with_truth, load_covariance,
    load_link_series, save_link_series, MeasurementSeries, SeriesKind, SyntheticConfig,
    SyntheticGroundTruth,
};
pub use predictor::{
    bias_of_eblp, estimate_mu, mspe_blp, mspe_blp_projection, partition_moments,
    sampled_row_projection, LinearFunctional, MomentPartition, PredictorModel,
};
pub use selection::{select_paths, selection_overlap, PathSelection};
pub use spectral::{
    effective_rank, eigenspectrum, eigenvector_energy, scale_to_unit_max, weighted_matrix,
    CovarianceModel, EigenvectorEnergy, Spectrum,
};
pub use topology::{
    build_routing_matrix, delete_links, path_values, shortest_paths, Link, PathRoute,
    RoutingMatrix, Topology,
};
