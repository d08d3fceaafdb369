use std::fmt;

use serde::Serialize;

use super::joint::JointTensor;
use super::solver::{fit_latent_class, LatentClassModel, RestartSummary, SolverOptions};
use crate::error::{Error, Result};
use crate::identifiability::is_informative_label;
use crate::matrices::{
    align_permutation, max_trace_permutation, Prior, Scenario, TransitionMatrix, DEFAULT_RANK_TOL,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub solver: SolverOptions,
    /// Best residual above this triggers a convergence warning.
    pub residual_threshold: f64,
    /// Largest tolerated deviation from axis symmetry in the input tensor.
    pub symmetry_tol: f64,
    /// Prior entries at or below this count as degenerate.
    pub min_prior: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            residual_threshold: 1e-10,
            symmetry_tol: 1e-8,
            min_prior: 1e-6,
        }
    }
}

impl EstimateOptions {
    pub fn with_restarts(restarts: usize) -> Self {
        let mut o = Self::default();
        o.solver.restarts = restarts;
        o
    }
}

/// A recovered scenario with solver diagnostics.
#[derive(Debug, Clone)]
pub struct Estimate<S: Real = f64> {
    pub scenario: Scenario<S>,
    /// Squared Frobenius residual between the fitted and the input tensor.
    pub residual: S,
    /// Row `i` of the reported `T` is hidden state `permutation[i]` of the raw fit.
    pub permutation: Vec<usize>,
    pub restarts: Vec<RestartSummary>,
    pub best_restart: usize,
    pub warnings: Vec<String>,
}

impl<S: Real> Estimate<S> {
    pub fn converged(&self, threshold: f64) -> bool {
        self.residual.as_f64() <= threshold
    }

    /// Re-labels the estimate to best match a known ground truth.
    pub fn align_to(&mut self, truth: &TransitionMatrix<S>) -> Result<()> {
        let a = align_permutation(&self.scenario.t, truth)?;
        self.scenario = self.scenario.permute(&a.permutation);
        self.permutation = a.permutation.iter().map(|&i| self.permutation[i]).collect();
        Ok(())
    }
}

/// Serializable summary used by reports.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateSummary {
    pub prior: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
    pub residual: f64,
    pub permutation: Vec<usize>,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub warnings: Vec<String>,
}

impl<S: Real> From<&Estimate<S>> for EstimateSummary {
    fn from(e: &Estimate<S>) -> Self {
        Self {
            prior: e.scenario.prior.to_vec(),
            t: e.scenario.t.to_rows(),
            residual: e.residual.as_f64(),
            permutation: e.permutation.clone(),
            best_restart: e.best_restart,
            restarts: e.restarts.clone(),
            warnings: e.warnings.clone(),
        }
    }
}

impl<S: Real> fmt::Display for Estimate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "prior: {:?}", self.scenario.prior.to_vec())?;
        writeln!(f, "T:")?;
        for row in self.scenario.t.to_rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        writeln!(f, "residual: {:.3e}", self.residual.as_f64())?;
        writeln!(f, "permutation: {:?}", self.permutation)?;
        let ok = self
            .restarts
            .iter()
            .filter(|r| r.residual <= 1e-10)
            .count();
        writeln!(
            f,
            "restarts: {} run, {} below 1e-10, best #{}",
            self.restarts.len(),
            ok,
            self.best_restart
        )?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Shared checks on a fitted (prior, T) pair: the uniqueness guarantee needs a
/// non-degenerate prior and an informative label.
pub(crate) fn precondition_warnings<S: Real>(scenario: &Scenario<S>, min_prior: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    let low: Vec<usize> = (0..scenario.k())
        .filter(|&h| scenario.prior.get(h).as_f64() <= min_prior)
        .collect();
    if !low.is_empty() {
        warnings.push(format!(
            "recovered prior is degenerate at classes {low:?}; uniqueness is not guaranteed"
        ));
    }
    if !is_informative_label(&scenario.t, S::lit(DEFAULT_RANK_TOL)) {
        warnings.push("recovered T is rank deficient; uniqueness is not guaranteed".into());
    }
    warnings
}

pub(crate) fn clean_prior<S: Real>(raw: &[S]) -> Result<Prior<S>> {
    let total = raw.iter().fold(S::zero(), |a, &b| a + b);
    Prior::new(raw.iter().map(|&w| w.max(S::zero()) / total).collect())
}

pub(crate) fn clean_rows<S: Real>(m: &nalgebra::DMatrix<S>) -> nalgebra::DMatrix<S> {
    let mut out = m.map(|v| v.max(S::zero()));
    for mut row in out.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    out
}

/// Recovers `(prior, T)` from the joint of `p >= 3` exchangeable noisy labels
/// with the default options.
pub fn estimate<S: Real>(joint: &JointTensor<S>, restarts: usize, seed: u64) -> Result<Estimate<S>> {
    estimate_with(joint, &EstimateOptions::with_restarts(restarts), seed)
}

pub fn estimate_with<S: Real>(
    joint: &JointTensor<S>,
    options: &EstimateOptions,
    seed: u64,
) -> Result<Estimate<S>> {
    let k = joint
        .k()
        .ok_or_else(|| Error::Dimension("noisy-label axes must share one cardinality".into()))?;
    if k < 2 {
        return Err(Error::Invalid("need K >= 2".into()));
    }
    if joint.order() < 3 {
        return Err(Error::Capability(format!(
            "recovery needs at least three noisy labels, got {}",
            joint.order()
        )));
    }
    let dev = joint.symmetry_deviation();
    if dev > options.symmetry_tol {
        return Err(Error::NonSymmetric(dev));
    }
    let fit = fit_latent_class(
        &LatentClassModel::shared(k, joint.order()),
        joint,
        &options.solver,
        seed,
    )?;
    let prior = clean_prior(&fit.prior)?;
    let t = TransitionMatrix::new(clean_rows(&fit.models[0]))?;
    let raw = Scenario::new(t, prior)?;
    let permutation = max_trace_permutation(&raw.t)?;
    let scenario = raw.permute(&permutation);
    let mut warnings = precondition_warnings(&scenario, options.min_prior);
    if fit.residual.as_f64() > options.residual_threshold {
        warnings.insert(
            0,
            format!(
                "best residual {:.3e} above threshold {:.1e} after {} restarts; output is best effort",
                fit.residual.as_f64(),
                options.residual_threshold,
                options.solver.restarts
            ),
        );
    }
    Ok(Estimate {
        scenario,
        residual: fit.residual,
        permutation,
        restarts: fit.restarts,
        best_restart: fit.best_restart,
        warnings,
    })
}
