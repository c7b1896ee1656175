//! Everything downstream of distillation: linear probes, coreset baselines, 1-NN scoring,
//! mutual k-NN alignment and 2-D PCA.

pub mod baselines;
pub mod knn;
pub mod pca;
pub mod probe;
pub mod report;

pub use baselines::{baseline_centroids, baseline_neighbors, baseline_random};
pub use knn::{cosine_similarity, knn_eval, mutual_knn_alignment};
pub use pca::{pca2, write_pca_csv};
pub use probe::{train_probe, ProbeConfig, ProbeResult, StopPolicy};
pub use report::{EvalReport, ReportRow};
