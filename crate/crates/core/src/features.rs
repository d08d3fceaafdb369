//! Discrete features that are conditionally independent given the hidden
//! state, their observation matrices, and recovery of `T` from two features
//! plus one noisy label.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::consensus::solver::{fit_latent_class, LatentClassModel, RestartSummary};
use crate::consensus::{
    clean_prior, clean_rows, empirical_joint_columns, precondition_warnings, EstimateOptions,
    JointTensor,
};
use crate::dataset::{NoisyDataset, Provenance, Record};
use crate::error::{Error, Result};
use crate::identifiability::ObservationModel;
use crate::matrices::{
    max_trace_permutation, ObsMatrix, Prior, Scenario, TransitionMatrix, DEFAULT_RANK_TOL,
};
use crate::rng::{categorical, dirichlet_flat, substream};
use crate::scalar::Real;

/// Rejection budget per feature matrix.
pub const MAX_FEATURE_ATTEMPTS: usize = 1000;

/// What the hidden state of a feature model ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HiddenSpace {
    Labels { k: usize },
    /// Hidden state `g·K + y` for group `g` and label `y`.
    GroupLabel { groups: usize, k: usize },
}

impl HiddenSpace {
    pub fn size(&self) -> usize {
        match *self {
            HiddenSpace::Labels { k } => k,
            HiddenSpace::GroupLabel { groups, k } => groups * k,
        }
    }

    pub fn label_count(&self) -> usize {
        match *self {
            HiddenSpace::Labels { k } | HiddenSpace::GroupLabel { k, .. } => k,
        }
    }

    /// Clean label carried by hidden state `h`.
    pub fn label_of(&self, h: usize) -> usize {
        h % self.label_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel<S: Real = f64> {
    pub hidden: HiddenSpace,
    pub models: Vec<ObsMatrix<S>>,
}

impl<S: Real> FeatureModel<S> {
    pub fn new(hidden: HiddenSpace, models: Vec<ObsMatrix<S>>) -> Result<Self> {
        let kh = hidden.size();
        if let Some(bad) = models.iter().position(|m| m.hidden() != kh) {
            return Err(Error::Dimension(format!(
                "feature {bad} has {} hidden states, expected {kh}",
                models[bad].hidden()
            )));
        }
        Ok(Self { hidden, models })
    }

    pub fn k_hidden(&self) -> usize {
        self.hidden.size()
    }

    pub fn d_star(&self) -> usize {
        self.models.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.models.iter().map(|m| m.cardinality()).collect()
    }
}

/// Samples one matrix per cardinality with flat-Dirichlet rows, redrawing
/// until its Kruskal rank reaches `min_kruskal`.
pub fn gen_feature_model<S: Real>(
    hidden: HiddenSpace,
    cardinalities: &[usize],
    min_kruskal: usize,
    seed: u64,
) -> Result<FeatureModel<S>> {
    let kh = hidden.size();
    if cardinalities.is_empty() {
        return Err(Error::Invalid("need at least one feature".into()));
    }
    if let Some(&c) = cardinalities.iter().find(|&&c| c < 2) {
        return Err(Error::Invalid(format!("feature cardinality {c} < 2")));
    }
    let cap = kh.min(*cardinalities.iter().min().unwrap_or(&2));
    if min_kruskal > cap {
        return Err(Error::Invalid(format!(
            "min_kruskal {min_kruskal} exceeds min(K_hidden, kappa) = {cap}"
        )));
    }
    let tol = S::lit(DEFAULT_RANK_TOL);
    let mut models = Vec::with_capacity(cardinalities.len());
    for (i, &c) in cardinalities.iter().enumerate() {
        let mut rng = substream(seed, i as u64);
        let mut found = None;
        for _ in 0..MAX_FEATURE_ATTEMPTS {
            let rows: Vec<Vec<f64>> = (0..kh).map(|_| dirichlet_flat(&mut rng, c)).collect();
            let m = ObsMatrix::<S>::new(DMatrix::from_fn(kh, c, |a, b| S::lit(rows[a][b])))?;
            if m.kruskal_rank(tol) >= min_kruskal {
                found = Some(m);
                break;
            }
        }
        models.push(found.ok_or_else(|| {
            Error::SearchExhausted(format!(
                "feature {i}: no matrix with Kruskal rank >= {min_kruskal} after {MAX_FEATURE_ATTEMPTS} draws"
            ))
        })?);
    }
    FeatureModel::new(hidden, models)
}

/// Records with hidden state `h ~ prior`, features `R_i ~ M_i[h, ·]`, and,
/// when `t` is given, `p` noisy labels from row `label(h)` of `T`.
pub fn sample_with_features<S: Real>(
    prior: &Prior<S>,
    t: Option<&TransitionMatrix<S>>,
    fm: &FeatureModel<S>,
    p: usize,
    n: usize,
    seed: u64,
) -> Result<NoisyDataset> {
    if n == 0 {
        return Err(Error::Invalid("need n >= 1".into()));
    }
    if prior.k() != fm.k_hidden() {
        return Err(Error::Dimension(format!(
            "prior has {} states, feature model {}",
            prior.k(),
            fm.k_hidden()
        )));
    }
    let k = fm.hidden.label_count();
    let t_rows = match t {
        Some(t) if t.k() != k => {
            return Err(Error::Dimension(format!("T is {0}x{0}, labels are {k}", t.k())))
        }
        Some(t) => Some(t.to_rows()),
        None => None,
    };
    let p = if t_rows.is_some() { p } else { 0 };
    let weights = prior.to_vec();
    let feature_rows: Vec<Vec<Vec<f64>>> = fm.models.iter().map(|m| m.to_rows()).collect();
    let mut rng = substream(seed, 0);
    let records = (0..n)
        .map(|_| {
            let h = categorical(&mut rng, &weights);
            let r = feature_rows.iter().map(|m| categorical(&mut rng, &m[h])).collect();
            let y = fm.hidden.label_of(h);
            let noisy = match &t_rows {
                Some(rows) => (0..p).map(|_| categorical(&mut rng, &rows[y])).collect(),
                None => Vec::new(),
            };
            Record {
                x: Vec::new(),
                r,
                y,
                noisy,
            }
        })
        .collect();
    let cards = fm.cardinalities();
    Ok(NoisyDataset {
        records,
        k,
        p,
        feature_cardinalities: cards.clone(),
        provenance: Provenance {
            model: "features".into(),
            seed,
            k,
            p,
            feature_cardinalities: cards,
            params: json!({
                "n": n,
                "hidden": fm.hidden,
                "prior": weights,
                "T": t_rows,
                "features": feature_rows,
            }),
        },
    })
}

/// `[T?, M_1, ..., M_d*]` as one observation model. Over a group×label hidden
/// space `T` is expanded so that hidden state `g·K + y` uses row `y`.
pub fn stack_observations<S: Real>(
    t: Option<&TransitionMatrix<S>>,
    fm: &FeatureModel<S>,
) -> Result<ObservationModel<S>> {
    let mut models = Vec::with_capacity(fm.d_star() + 1);
    if let Some(t) = t {
        let k = fm.hidden.label_count();
        if t.k() != k {
            return Err(Error::Dimension(format!("T is {0}x{0}, labels are {k}", t.k())));
        }
        let kh = fm.k_hidden();
        let expanded = DMatrix::from_fn(kh, k, |h, j| t.get(fm.hidden.label_of(h), j));
        models.push(ObsMatrix::new(expanded)?);
    }
    models.extend(fm.models.iter().cloned());
    ObservationModel::new(models)
}

/// Meta-feature matrix of a group of features: outcome `(k_1, ..., k_m)`
/// (first member most significant) has probability `Π M_i[j, k_i]`.
fn meta_matrix<S: Real>(fm: &FeatureModel<S>, group: &[usize]) -> Result<ObsMatrix<S>> {
    let kh = fm.k_hidden();
    let cards: Vec<usize> = group.iter().map(|&i| fm.models[i].cardinality()).collect();
    let tau: usize = cards.iter().product();
    let mut m = DMatrix::<S>::zeros(kh, tau);
    for col in 0..tau {
        let mut rem = col;
        let mut outcome = vec![0; group.len()];
        for (slot, &c) in outcome.iter_mut().zip(&cards).rev() {
            *slot = rem % c;
            rem /= c;
        }
        for h in 0..kh {
            m[(h, col)] = group
                .iter()
                .zip(&outcome)
                .fold(S::one(), |acc, (&i, &o)| acc * fm.models[i].get(h, o));
        }
    }
    ObsMatrix::new(m)
}

/// Groups features into two meta-features. The split must partition the
/// feature indices `0..d*` into two non-empty sides.
pub fn group_meta_features<S: Real>(
    fm: &FeatureModel<S>,
    group_a: &[usize],
    group_b: &[usize],
) -> Result<(ObsMatrix<S>, ObsMatrix<S>)> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Invalid("both sides of a split must be non-empty".into()));
    }
    let mut seen = vec![false; fm.d_star()];
    for &i in group_a.iter().chain(group_b) {
        if i >= seen.len() || seen[i] {
            return Err(Error::Invalid(format!("split does not partition the features (index {i})")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::Invalid("split leaves features out".into()));
    }
    Ok((meta_matrix(fm, group_a)?, meta_matrix(fm, group_b)?))
}

/// Recovered label model and the two feature matrices used for the fit.
#[derive(Debug, Clone)]
pub struct FeatureEstimate<S: Real = f64> {
    pub scenario: Scenario<S>,
    pub feature_models: [ObsMatrix<S>; 2],
    pub residual: S,
    pub permutation: Vec<usize>,
    pub restarts: Vec<RestartSummary>,
    pub best_restart: usize,
    pub warnings: Vec<String>,
}

/// Fits `(prior, M_a, M_b, T)` to the joint of `(R_a, R_b, Ỹ)` with `K`
/// hidden states. The shared hidden labelling is fixed by maximizing the
/// trace of `T`.
pub fn estimate_features_joint<S: Real>(
    joint: &JointTensor<S>,
    k: usize,
    options: &EstimateOptions,
    seed: u64,
) -> Result<FeatureEstimate<S>> {
    if joint.order() != 3 {
        return Err(Error::Capability(format!(
            "feature recovery uses exactly three observed variables, got {}",
            joint.order()
        )));
    }
    let dims = joint.dims().to_vec();
    if dims[2] != k {
        return Err(Error::Dimension(format!("label axis has {} values, K = {k}", dims[2])));
    }
    let fit = fit_latent_class(&LatentClassModel::distinct(k, &dims), joint, &options.solver, seed)?;
    let prior = clean_prior(&fit.prior)?;
    let m_a = ObsMatrix::new(clean_rows(&fit.models[0]))?;
    let m_b = ObsMatrix::new(clean_rows(&fit.models[1]))?;
    let t = TransitionMatrix::new(clean_rows(&fit.models[2]))?;
    let permutation = max_trace_permutation(&t)?;
    let scenario = Scenario::new(t, prior)?.permute(&permutation);
    let feature_models = [m_a.permute_rows(&permutation), m_b.permute_rows(&permutation)];
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
    let dominant = (0..k).all(|j| (0..k).all(|i| scenario.t.get(j, j) >= scenario.t.get(i, j)));
    if !dominant {
        warnings.push(
            "T is not diagonally dominant; the shared hidden labelling chosen by trace is ambiguous".into(),
        );
    }
    Ok(FeatureEstimate {
        scenario,
        feature_models,
        residual: fit.residual,
        permutation,
        restarts: fit.restarts,
        best_restart: fit.best_restart,
        warnings,
    })
}

/// Recovery from a dataset using features `r_1`, `r_2` and noisy label 1.
pub fn estimate_from_features<S: Real>(
    ds: &NoisyDataset,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<FeatureEstimate<S>> {
    if ds.feature_cardinalities.len() < 2 {
        return Err(Error::Capability(format!(
            "feature recovery needs at least two categorical features, dataset has {}",
            ds.feature_cardinalities.len()
        )));
    }
    if ds.p < 1 {
        return Err(Error::Capability("feature recovery needs one noisy label".into()));
    }
    let a = ds.feature_column(0);
    let b = ds.feature_column(1);
    let y = ds.noisy_column(0);
    let dims = [ds.feature_cardinalities[0], ds.feature_cardinalities[1], k];
    let joint = empirical_joint_columns::<S>(&[&a, &b, &y], &dims)?;
    let mut options = EstimateOptions::with_restarts(restarts);
    options.residual_threshold = sampling_residual_threshold(ds.len());
    estimate_features_joint(&joint, k, &options, seed)
}

/// Residual level expected from sampling noise alone with `n` records.
pub fn sampling_residual_threshold(n: usize) -> f64 {
    (4.0 / n.max(1) as f64).max(1e-10)
}
