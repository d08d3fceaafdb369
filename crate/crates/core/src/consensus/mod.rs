//! Consensus statistics, moment-based recovery of `(prior, T)`, the
//! two-label non-identifiability witness, mixture-proportion conversions and
//! error metrics.

mod binary;
mod estimate;
mod joint;
mod metrics;
pub mod solver;
mod witness;

pub use binary::{binary_stats, mpe_forward, mpe_inverse, mpe_noise_rates, BinaryStats, MpeRates};
pub use estimate::{estimate, estimate_with, Estimate, EstimateOptions, EstimateSummary};
pub(crate) use estimate::{clean_prior, clean_rows, precondition_warnings};
pub use joint::{
    empirical_joint, empirical_joint_columns, exact_joint, exact_joint_models, JointTensor,
};
pub use metrics::{err_metric, mixing_bound, ErrMode, MixingBound};
pub use witness::{witness_p2, BinaryParams, Witness, WITNESS_MATCH_TOL, WITNESS_MIN_DISTANCE};
