//! Estimate the number of K-Means clusters from the mean hypersphere
//! density of the clusters.
//!
//! The pipeline is: load or generate a [`Dataset`], [`sweep`] K over a range
//! with seeded best-of-restarts Lloyd runs, then [`estimate_k`] on the
//! resulting mean-density curve. Silhouette, WSS and the gap statistic are
//! computed alongside for comparison.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod kmeans;
pub mod sweep;

pub use baselines::{gap_statistic, silhouette_mean, wss_curve_point, GapResult};
pub use dataset::{
    euclidean_distance, load_csv, load_csv_with, make_blobs, normalize, write_csv, BlobSpec, Blobs,
    CsvOptions, Dataset, HeaderMode, NormalizeScheme,
};
pub use error::{Error, Result};
pub use geometry::{
    cluster_density, cluster_radius, hypersphere_log_volume, log_gamma, mean_density,
    ClusterGeometry,
};
pub use kmeans::{
    assign, best_of_restarts, init_centroids, lloyd, Clustering, InitStrategy, KMeansConfig,
};
pub use sweep::{
    elbow_region, estimate_k, knee_point, sweep, Estimate, MetricSet, MetricsRow, Rule,
    SweepConfig, SweepResult, DEFAULT_TAU,
};
