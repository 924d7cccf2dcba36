//! Transferability estimation from pre-extracted feature embeddings.
//!
//! The crate scores how well a source model's embedding space serves a
//! target task by coupling source and target samples with entropic optimal
//! transport and measuring how predictable target labels are from the
//! coupled source labels:
//!
//! * [`metrics::f_otce`] couples samples under squared Euclidean cost.
//! * [`metrics::jc_otce`] additionally charges a class-to-class Wasserstein
//!   distance.
//! * [`metrics::nce_paired`] is the paired-sample baseline.
//!
//! [`rank`] evaluates metric quality by rank correlation against known
//! accuracies, [`guidance`] differentiates F-OTCE through unrolled Sinkhorn
//! iterations to optimize target embeddings, and [`synth`] generates seeded
//! task pairs with controllable relatedness.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what file ingestion produces.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod guidance;
pub mod metrics;
pub mod ot;
pub mod rank;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub use data::{read_csv, read_feature_file, write_feature_file, FeatureSet};
pub use guidance::{f_otce_value_and_grad, nearest_centroid_probe, optimize_target_embeddings, GradConfig};
pub use metrics::{
    f_otce, jc_otce, joint_label_distribution, label_distance_matrix, nce_paired, negative_conditional_entropy,
    MetricConfig, MetricId, TransferabilityScore,
};
pub use ot::{exact_ot_bruteforce, sinkhorn, squared_euclidean_cost, transport_cost, SinkhornConfig};
pub use rank::{kendall_tau, rank_sources, spearman_rho, ScoredPair};
pub use synth::{generate_task_pair, make_two_source_toy, SyntheticTaskSpec};

pub type FeatureSetF64 = data::FeatureSet<f64>;
pub type FeatureSetF32 = data::FeatureSet<f32>;
pub type CostMatrixF64 = ot::CostMatrix<f64>;
pub type CostMatrixF32 = ot::CostMatrix<f32>;
pub type CouplingF64 = ot::Coupling<f64>;
pub type CouplingF32 = ot::Coupling<f32>;
pub type SinkhornResultF64 = ot::SinkhornResult<f64>;
pub type JointLabelDistributionF64 = metrics::JointLabelDistribution<f64>;
pub type LabelDistanceMatrixF64 = metrics::LabelDistanceMatrix<f64>;
pub type OptimizationRunF64 = guidance::OptimizationRun<f64>;
