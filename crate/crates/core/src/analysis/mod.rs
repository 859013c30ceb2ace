//! Metrics derived from trajectories: similarity, dynamical-transition
//! scans, symmetry-breaking statistics and quantum-to-classical maps.

pub mod dpt;
pub mod heatmap;
pub mod similarity;
pub mod stats;
pub mod symmetry;

pub use dpt::{dpt_scan, estimate_critical_point, DptScan, ScanOptions};
pub use heatmap::{qc_heatmap, Heatmap};
pub use similarity::{
    average_similarity, initial_grid, pearson, similarity, similarity_angular, similarity_grid, SimilarityGrid,
    SingularSet,
};
pub use stats::{js_divergence, ks_two_sample, shannon_entropy, symmetry_statistics, Histogram, SymmetryStats};
pub use symmetry::{adiabatic_ensemble, AdiabaticEnsemble};
