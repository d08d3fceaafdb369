//! Identifiability checks for latent class models with conditionally
//! independent observations.
//!
//! Every check returns an [`IdentifiabilityReport`] whose verdict is exactly
//! `lhs >= rhs`. The sufficient conditions here never prove
//! non-identifiability, so a failed check reports
//! [`Verdict::NotGuaranteed`]. When a check has a precondition that is not
//! itself a rank sum (an informative label, a minimum feature count), the
//! report describes that precondition through `lhs`/`rhs` when it fails.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrices::{
    kruskal_rank_detailed, numerical_rank, Combinations, ObsMatrix, TransitionMatrix,
    DEFAULT_RANK_TOL,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Identifiable,
    NotGuaranteed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Identifiable => "identifiable",
            Verdict::NotGuaranteed => "not_guaranteed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub condition_name: String,
    pub lhs: i64,
    pub rhs: i64,
    pub per_model_kruskal: Vec<usize>,
    pub verdict: Verdict,
    pub notes: String,
}

impl IdentifiabilityReport {
    fn new(
        condition_name: &str,
        lhs: i64,
        rhs: i64,
        per_model_kruskal: Vec<usize>,
        notes: Vec<String>,
    ) -> Self {
        let verdict = if lhs >= rhs {
            Verdict::Identifiable
        } else {
            Verdict::NotGuaranteed
        };
        Self {
            condition_name: condition_name.to_string(),
            lhs,
            rhs,
            per_model_kruskal,
            verdict,
            notes: notes.join(" "),
        }
    }

    pub fn is_identifiable(&self) -> bool {
        self.verdict == Verdict::Identifiable
    }
}

impl fmt::Display for IdentifiabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "condition: {}", self.condition_name)?;
        writeln!(f, "lhs: {}", self.lhs)?;
        writeln!(f, "rhs: {}", self.rhs)?;
        let kr: Vec<String> = self.per_model_kruskal.iter().map(|k| k.to_string()).collect();
        writeln!(f, "per_model_kruskal: [{}]", kr.join(", "))?;
        writeln!(f, "verdict: {}", self.verdict)?;
        write!(f, "notes: {}", self.notes)
    }
}

/// The observed variables of a latent class model, one matrix per variable.
#[derive(Debug, Clone)]
pub struct ObservationModel<S: Real = f64> {
    models: Vec<ObsMatrix<S>>,
}

impl<S: Real> ObservationModel<S> {
    pub fn new(models: Vec<ObsMatrix<S>>) -> Result<Self> {
        if let Some(first) = models.first() {
            let k = first.hidden();
            if let Some(bad) = models.iter().position(|m| m.hidden() != k) {
                return Err(Error::Dimension(format!(
                    "model {bad} has {} hidden states, expected {k}",
                    models[bad].hidden()
                )));
            }
        }
        Ok(Self { models })
    }

    /// `p` copies of the same transition matrix (i.i.d. noisy labels).
    pub fn repeated(t: &TransitionMatrix<S>, p: usize) -> Self {
        Self {
            models: vec![t.as_obs().clone(); p],
        }
    }

    pub fn push(&mut self, m: ObsMatrix<S>) -> Result<()> {
        if let Some(k) = self.k() {
            if m.hidden() != k {
                return Err(Error::Dimension(format!(
                    "model has {} hidden states, expected {k}",
                    m.hidden()
                )));
            }
        }
        self.models.push(m);
        Ok(())
    }

    pub fn models(&self) -> &[ObsMatrix<S>] {
        &self.models
    }

    pub fn p(&self) -> usize {
        self.models.len()
    }

    pub fn k(&self) -> Option<usize> {
        self.models.first().map(|m| m.hidden())
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.models.iter().map(|m| m.cardinality()).collect()
    }
}

fn default_tol<S: Real>() -> S {
    S::lit(DEFAULT_RANK_TOL)
}

fn margin_note<S: Real>(idx: usize, rank: usize, margin: S) -> Option<String> {
    (rank >= 2 && margin.as_f64() < 1e-4).then(|| {
        format!(
            "model {idx} is borderline: Kruskal rank {rank} accepted with singular-value ratio {:.3e}.",
            margin.as_f64()
        )
    })
}

/// Sum-of-Kruskal-ranks condition `Σ Kr(M_i) >= 2K + p - 1`.
pub fn check_kruskal_sum<S: Real>(obs: &ObservationModel<S>) -> Result<IdentifiabilityReport> {
    let k = obs
        .k()
        .ok_or_else(|| Error::Invalid("observation model needs at least one variable".into()))?;
    let p = obs.p();
    let tol = default_tol::<S>();
    let mut notes = Vec::new();
    let mut ranks = Vec::with_capacity(p);
    for (i, m) in obs.models().iter().enumerate() {
        let kr = kruskal_rank_detailed(m.matrix(), tol);
        notes.extend(margin_note(i, kr.rank, kr.margin));
        ranks.push(kr.rank);
    }
    let lhs = ranks.iter().sum::<usize>() as i64;
    let rhs = (2 * k + p) as i64 - 1;
    notes.insert(
        0,
        format!("sum of Kruskal ranks over p={p} variables vs 2K+p-1 with K={k}."),
    );
    if lhs < rhs {
        notes.push(
            "The condition is sufficient but not necessary; failing it does not prove non-identifiability."
                .into(),
        );
    }
    Ok(IdentifiabilityReport::new(
        "kruskal_sum",
        lhs,
        rhs,
        ranks,
        notes,
    ))
}

/// A noisy label is informative when its transition matrix has full rank.
pub fn is_informative_label<S: Real>(t: &TransitionMatrix<S>, tol: S) -> bool {
    numerical_rank(t.matrix(), tol) == t.k()
}

/// Instance-level check with three i.i.d. noisy labels: `M_1 = M_2 = M_3 = T`,
/// identifiable iff `T` is informative, in which case `3K >= 2K + 2`.
pub fn check_instance_three_labels<S: Real>(t: &TransitionMatrix<S>) -> IdentifiabilityReport {
    let k = t.k();
    let tol = default_tol::<S>();
    let kr = kruskal_rank_detailed(t.matrix(), tol);
    let rank = numerical_rank(t.matrix(), tol);
    let ranks = vec![kr.rank; 3];
    if rank == k {
        let mut notes = vec![format!(
            "M_1 = M_2 = M_3 = T; T has full rank so Kr(T) = K = {k} and 3K = {} >= 2K+2 = {}.",
            3 * k,
            2 * k + 2
        )];
        notes.extend(margin_note(0, kr.rank, kr.margin));
        IdentifiabilityReport::new(
            "instance_three_labels",
            (3 * kr.rank) as i64,
            (2 * k + 2) as i64,
            ranks,
            notes,
        )
    } else {
        let mut notes = vec![format!(
            "T has rank {rank} < K = {k}: the noisy label is not informative, so three labels are not guaranteed to identify T."
        )];
        if 3 * kr.rank >= 2 * k + 2 {
            notes.push(format!(
                "The general Kruskal sum 3*Kr(T) = {} still reaches 2K+2 = {}; the instance-level guarantee is stated only for informative labels.",
                3 * kr.rank,
                2 * k + 2
            ));
        }
        IdentifiabilityReport::new(
            "instance_three_labels: informative label",
            rank as i64,
            k as i64,
            ranks,
            notes,
        )
    }
}

/// A feature is informative when its observation matrix has Kruskal rank >= 2.
pub fn is_informative_feature<S: Real>(m: &ObsMatrix<S>) -> bool {
    m.kruskal_rank(default_tol::<S>()) >= 2
}

/// Known-group check: one informative noisy label plus `d*` informative,
/// disentangled features, identifiable when `d* >= K`. Uninformative
/// features are filtered out before counting.
pub fn check_group_features<S: Real>(
    t: &TransitionMatrix<S>,
    features: &ObservationModel<S>,
) -> Result<IdentifiabilityReport> {
    let k = t.k();
    if let Some(fk) = features.k() {
        if fk != k {
            return Err(Error::Dimension(format!(
                "features have {fk} hidden states but T is {k}x{k}"
            )));
        }
    }
    let tol = default_tol::<S>();
    let kr_t = t.as_obs().kruskal_rank(tol);
    let mut ranks = vec![kr_t];
    let mut d_star = 0usize;
    for m in features.models() {
        let kr = m.kruskal_rank(tol);
        ranks.push(kr);
        if kr >= 2 {
            d_star += 1;
        }
    }
    let filtered = features.p() - d_star;
    let mut notes = vec![format!(
        "{d_star} of {} features are informative (Kruskal rank >= 2).",
        features.p()
    )];
    if filtered > 0 {
        notes.push(format!("{filtered} uninformative feature(s) excluded from d*."));
    }
    if !is_informative_label(t, tol) {
        notes.push("T is not full rank, so the noisy label is not informative.".into());
        return Ok(IdentifiabilityReport::new(
            "group_features: informative label",
            numerical_rank(t.matrix(), tol) as i64,
            k as i64,
            ranks,
            notes,
        ));
    }
    notes.push(format!(
        "Kr(T) + sum Kr(M_i) >= K + 2d* = {} vs 2K + d* = {} (holds iff d* >= K = {k}).",
        k + 2 * d_star,
        2 * k + d_star
    ));
    Ok(IdentifiabilityReport::new(
        "group_features",
        (k + 2 * d_star) as i64,
        (2 * k + d_star) as i64,
        ranks,
        notes,
    ))
}

/// Unknown-group check over the product hidden space of size `|G|·K`:
/// identifiable when `d* >= 2|G|K - 1`, via `1 + 2d* >= 2|G|K + d*`.
pub fn check_unknown_groups(num_groups: usize, k: usize, d_star: usize) -> Result<IdentifiabilityReport> {
    if num_groups < 1 {
        return Err(Error::Invalid("need at least one group".into()));
    }
    if k < 2 {
        return Err(Error::Invalid("need K >= 2".into()));
    }
    let hidden = num_groups * k;
    let notes = vec![
        format!(
            "Combined hidden space has |G|K = {hidden} states; with Kr(T) >= 1 and d* = {d_star} informative features, 1 + 2d* = {} vs 2|G|K + d* = {} (threshold d* >= {}).",
            1 + 2 * d_star,
            2 * hidden + d_star,
            2 * hidden - 1
        ),
        "This arithmetic uses Kr(T) >= 1, whereas the known-group check uses Kr(T) = K.".into(),
    ];
    Ok(IdentifiabilityReport::new(
        "unknown_groups",
        (1 + 2 * d_star) as i64,
        (2 * hidden + d_star) as i64,
        Vec::new(),
        notes,
    ))
}

/// Best two-way grouping of features into meta-features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSplit {
    pub group_a: Vec<usize>,
    pub group_b: Vec<usize>,
    pub tau_a: u128,
    pub tau_b: u128,
    pub allman_sum: usize,
}

/// `⌈log₂((K + 2) / 2)⌉`, the feature-count threshold for generic
/// identifiability.
pub fn generic_feature_threshold(k: usize) -> usize {
    let target = (k + 2) as f64 / 2.0;
    let mut d = 0;
    while ((1u64 << d) as f64) < target {
        d += 1;
    }
    d
}

fn saturating_product(cards: &[usize], idx: &[usize]) -> u128 {
    idx.iter()
        .fold(1u128, |acc, &i| acc.saturating_mul(cards[i] as u128))
}

/// Enumerates every split of the features into two non-empty meta-features
/// and returns all of them, best Allman sum first (ties keep enumeration order).
pub fn enumerate_meta_splits(k: usize, cardinalities: &[usize]) -> Vec<MetaSplit> {
    let d = cardinalities.len();
    let mut out = Vec::new();
    if d < 2 {
        return out;
    }
    // Feature 0 always goes to group A so each unordered split appears once.
    let rest: Vec<usize> = (1..d).collect();
    for size in 0..d - 1 {
        for pick in Combinations::new(rest.len(), size) {
            let mut group_a = vec![0];
            group_a.extend(pick.iter().map(|&i| rest[i]));
            let group_b: Vec<usize> = (0..d).filter(|i| !group_a.contains(i)).collect();
            let tau_a = saturating_product(cardinalities, &group_a);
            let tau_b = saturating_product(cardinalities, &group_b);
            let kk = k as u128;
            let allman_sum = (kk.min(tau_a) + kk.min(tau_b) + kk) as usize;
            out.push(MetaSplit {
                group_a,
                group_b,
                tau_a,
                tau_b,
                allman_sum,
            });
        }
    }
    out.sort_by(|a, b| b.allman_sum.cmp(&a.allman_sum));
    out
}

/// Generic identifiability with one informative label and `d*` features
/// grouped into two meta-features. Requires both
/// `d* >= ⌈log₂((K+2)/2)⌉` and, for the best split,
/// `min(K,τ₁) + min(K,τ₂) + K >= 2K + 2`.
pub fn check_generic(k: usize, cardinalities: &[usize]) -> Result<IdentifiabilityReport> {
    if k < 2 {
        return Err(Error::Invalid("need K >= 2".into()));
    }
    if let Some(bad) = cardinalities.iter().position(|&c| c < 2) {
        return Err(Error::Invalid(format!(
            "feature {bad} has cardinality {} < 2",
            cardinalities[bad]
        )));
    }
    let d = cardinalities.len();
    let threshold = generic_feature_threshold(k);
    let mut notes = vec![format!(
        "d* = {d} features vs threshold ceil(log2((K+2)/2)) = {threshold}."
    )];
    if d < threshold {
        if d < 2 && k > 2 {
            notes.push("Fewer than 2 features cannot form two meta-features.".into());
        }
        return Ok(IdentifiabilityReport::new(
            "generic: feature count",
            d as i64,
            threshold as i64,
            Vec::new(),
            notes,
        ));
    }
    let splits = enumerate_meta_splits(k, cardinalities);
    let rhs = (2 * k + 2) as i64;
    let Some(best) = splits.first() else {
        notes.push(format!(
            "With {d} feature(s) no split yields two non-empty meta-features; only {} observed variable(s) are available, short of the three the meta-feature argument needs.",
            d + 1
        ));
        let lhs = match d {
            0 => k,
            _ => k.min(cardinalities[0]) + 1 + k,
        };
        return Ok(IdentifiabilityReport::new(
            "generic: allman",
            lhs as i64,
            rhs,
            Vec::new(),
            notes,
        ));
    };
    let distinct: std::collections::BTreeSet<usize> =
        splits.iter().map(|s| s.allman_sum).collect();
    notes.push(format!(
        "Best split {:?} | {:?} gives meta-cardinalities ({}, {}) and min(K,tau1)+min(K,tau2)+min(K,K) = {} vs 2K+2 = {rhs}.",
        best.group_a, best.group_b, best.tau_a, best.tau_b, best.allman_sum
    ));
    if distinct.len() > 1 {
        notes.push(format!(
            "Grouping choice matters: {} splits give {} distinct sums (worst {}).",
            splits.len(),
            distinct.len(),
            distinct.iter().next().unwrap()
        ));
    } else {
        notes.push(format!("All {} splits give the same sum.", splits.len()));
    }
    let per_split = vec![best.tau_a.min(k as u128) as usize, best.tau_b.min(k as u128) as usize, k];
    Ok(IdentifiabilityReport::new(
        "generic: allman",
        best.allman_sum as i64,
        rhs,
        per_split,
        notes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_rank_t(k: usize) -> TransitionMatrix<f64> {
        let mut rows = vec![vec![0.0; k]; k];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 0.6 } else { 0.4 / (k - 1) as f64 };
            }
        }
        TransitionMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn kruskal_sum_three_full_rank() {
        let t = full_rank_t(4);
        let r = check_kruskal_sum(&ObservationModel::repeated(&t, 3)).unwrap();
        assert_eq!((r.lhs, r.rhs), (12, 10));
        assert_eq!(r.verdict, Verdict::Identifiable);
    }

    #[test]
    fn kruskal_sum_two_labels_not_guaranteed() {
        let t = full_rank_t(2);
        let r = check_kruskal_sum(&ObservationModel::repeated(&t, 2)).unwrap();
        assert_eq!((r.lhs, r.rhs), (4, 5));
        assert_eq!(r.verdict, Verdict::NotGuaranteed);
        assert!(r.notes.contains("sufficient but not necessary"));
    }

    #[test]
    fn kruskal_sum_single_identity() {
        let t = TransitionMatrix::<f64>::identity(2).unwrap();
        let r = check_kruskal_sum(&ObservationModel::repeated(&t, 1)).unwrap();
        assert_eq!((r.lhs, r.rhs), (2, 4));
        assert!(!r.is_identifiable());
    }

    #[test]
    fn kruskal_sum_rejects_mismatch_and_empty() {
        let a = ObsMatrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = ObsMatrix::<f64>::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(ObservationModel::new(vec![a, b]).is_err());
        assert!(check_kruskal_sum(&ObservationModel::<f64>::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn informative_label_examples() {
        let t = TransitionMatrix::<f64>::from_rows(&[vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        assert!(is_informative_label(&t, 1e-8));
        assert!(!is_informative_label(&TransitionMatrix::<f64>::uniform(3).unwrap(), 1e-8));
    }

    #[test]
    fn instance_three_labels_rank_deficient() {
        let t = TransitionMatrix::<f64>::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let r = check_instance_three_labels(&t);
        assert_eq!(r.verdict, Verdict::NotGuaranteed);
        assert_eq!((r.lhs, r.rhs), (1, 2));
    }

    #[test]
    fn instance_three_labels_k5() {
        let r = check_instance_three_labels(&full_rank_t(5));
        assert_eq!((r.lhs, r.rhs), (15, 12));
        assert!(r.is_identifiable());
    }

    #[test]
    fn informative_feature_examples() {
        let eq = ObsMatrix::<f64>::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(!is_informative_feature(&eq));
        let id = ObsMatrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(is_informative_feature(&id));
    }

    fn binary_feature(a: f64, b: f64, k: usize) -> ObsMatrix<f64> {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let p = a + (b - a) * j as f64 / (k - 1).max(1) as f64;
                vec![p, 1.0 - p]
            })
            .collect();
        ObsMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn group_features_threshold() {
        let t = full_rank_t(3);
        let feats = |d: usize| {
            ObservationModel::new((0..d).map(|i| binary_feature(0.1 + 0.05 * i as f64, 0.9, 3)).collect())
                .unwrap()
        };
        let r = check_group_features(&t, &feats(3)).unwrap();
        assert!(r.is_identifiable());
        assert_eq!((r.lhs, r.rhs), (9, 9));
        let r = check_group_features(&t, &feats(2)).unwrap();
        assert_eq!(r.verdict, Verdict::NotGuaranteed);
    }

    #[test]
    fn group_features_filters_uninformative() {
        let t = full_rank_t(2);
        let good = binary_feature(0.2, 0.7, 2);
        let bad = binary_feature(0.4, 0.4, 2);
        let r = check_group_features(&t, &ObservationModel::new(vec![good, bad]).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::NotGuaranteed);
        assert_eq!((r.lhs, r.rhs), (4, 5));
        assert!(r.notes.contains("1 of 2 features"));
    }

    #[test]
    fn unknown_groups_examples() {
        assert!(check_unknown_groups(2, 2, 7).unwrap().is_identifiable());
        assert!(check_unknown_groups(1, 2, 3).unwrap().is_identifiable());
        assert!(!check_unknown_groups(2, 2, 6).unwrap().is_identifiable());
        assert!(check_unknown_groups(0, 2, 6).is_err());
    }

    #[test]
    fn generic_threshold_values() {
        assert_eq!(generic_feature_threshold(2), 1);
        assert_eq!(generic_feature_threshold(3), 2);
        assert_eq!(generic_feature_threshold(6), 2);
        assert_eq!(generic_feature_threshold(7), 3);
        assert_eq!(generic_feature_threshold(10), 3);
    }

    #[test]
    fn generic_k10_three_binary() {
        let r = check_generic(10, &[2, 2, 2]).unwrap();
        assert_eq!((r.lhs, r.rhs), (16, 22));
        assert_eq!(r.verdict, Verdict::NotGuaranteed);
        assert!(r.notes.contains("Best split"));
    }

    #[test]
    fn generic_single_feature_has_no_split() {
        let r = check_generic(2, &[2]).unwrap();
        assert_eq!(r.verdict, Verdict::NotGuaranteed);
        assert_eq!((r.lhs, r.rhs), (5, 6));
        let r = check_generic(2, &[]).unwrap();
        assert_eq!((r.lhs, r.rhs), (0, 1));
    }

    #[test]
    fn generic_uneven_cardinalities_prefer_balanced_split() {
        // K=4: split {0}|{1,2} gives (16, 4) -> 4+4+4; {0,1}|{2} gives (32, 2) -> 4+2+4.
        let r = check_generic(4, &[16, 2, 2]).unwrap();
        assert_eq!(r.lhs, 12);
        assert!(r.is_identifiable());
        assert!(r.notes.contains("Grouping choice matters"));
    }

    #[test]
    fn report_serializes_with_exact_fields() {
        let r = check_unknown_groups(1, 2, 3).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            ["condition_name", "lhs", "notes", "per_model_kruskal", "rhs", "verdict"]
        );
        assert_eq!(v["verdict"], "identifiable");
    }
}
