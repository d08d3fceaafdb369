//! Identifiability checks and moment-based recovery for label-noise
//! transition matrices, plus seeded synthetic data generators.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the unsuffixed
//! type names default to `f64` and `*F32` aliases are provided below.

pub mod consensus;
pub mod dataset;
pub mod error;
pub mod features;
pub mod identifiability;
pub mod matrices;
pub mod noisegen;
pub mod rng;
pub mod scalar;

pub use consensus::{
    binary_stats, empirical_joint, err_metric, estimate, estimate_with, exact_joint, mixing_bound,
    witness_p2, BinaryStats, ErrMode, Estimate, EstimateOptions, JointTensor, MixingBound, Witness,
};
pub use dataset::{NoisyDataset, Provenance, Record};
pub use error::{Error, Result};
pub use features::{FeatureModel, HiddenSpace};
pub use identifiability::{IdentifiabilityReport, ObservationModel, Verdict};
pub use matrices::{
    align_permutation, frobenius_distance, kruskal_rank, numerical_rank, ObsMatrix, Prior,
    Scenario, TransitionMatrix,
};
pub use scalar::Real;

pub type ObsMatrixF32 = ObsMatrix<f32>;
pub type TransitionMatrixF32 = TransitionMatrix<f32>;
pub type PriorF32 = Prior<f32>;
pub type ScenarioF32 = Scenario<f32>;
pub type JointTensorF32 = JointTensor<f32>;
pub type FeatureModelF32 = FeatureModel<f32>;
