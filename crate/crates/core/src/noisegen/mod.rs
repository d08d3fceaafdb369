//! Synthetic clean/noisy label generation.
//!
//! Every generator is deterministic given its seed. Probabilities may come in
//! any [`Real`] type; sampling itself runs in `f64`.

mod instance;
mod unstructured;

pub use instance::{
    apply_instance_noise, instance_noise, instance_rows, sample_instance_dataset,
    truncated_normal, InstanceNoise, FLIP_RATE_SD,
};
pub use unstructured::{
    check_2nn, form_triplets, two_nn_threshold, unstructured_process, LabelAssignment,
    TripletDataset, TwoNnCheck, UnstructuredParams,
};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{NoisyDataset, Provenance, Record};
use crate::error::{Error, Result};
use crate::matrices::{Prior, TransitionMatrix, STOCHASTIC_TOL};
use crate::rng::{categorical, seeded};
use crate::scalar::Real;

/// Adjacent-label flipping: `T[i,i] = 1 - ε`, `T[i, (i+1) mod K] = ε`.
pub fn asymmetric_t<S: Real>(k: usize, eps: f64) -> Result<TransitionMatrix<S>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Invalid(format!("noise rate {eps} is outside [0, 1]")));
    }
    if k < 2 {
        return Err(Error::Invalid("need K >= 2".into()));
    }
    let mut rows = vec![vec![0.0; k]; k];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] += 1.0 - eps;
        row[(i + 1) % k] += eps;
    }
    TransitionMatrix::from_rows(&rows)
}

fn rows_f64<S: Real>(t: &TransitionMatrix<S>) -> Vec<Vec<f64>> {
    t.to_rows()
}

/// `n` records with `y ~ prior` and `p` labels drawn independently from row `y` of `T`.
pub fn sample_iid_noisy<S: Real>(
    prior: &Prior<S>,
    t: &TransitionMatrix<S>,
    p: usize,
    n: usize,
    seed: u64,
) -> Result<NoisyDataset> {
    if p == 0 || n == 0 {
        return Err(Error::Invalid("need p >= 1 and n >= 1".into()));
    }
    if prior.k() != t.k() {
        return Err(Error::Dimension(format!(
            "prior has {} classes, T is {}x{}",
            prior.k(),
            t.k(),
            t.k()
        )));
    }
    let weights = prior.to_vec();
    let rows = rows_f64(t);
    let mut rng = seeded(seed);
    let records = (0..n)
        .map(|_| {
            let y = categorical(&mut rng, &weights);
            let noisy = (0..p).map(|_| categorical(&mut rng, &rows[y])).collect();
            Record {
                x: Vec::new(),
                r: Vec::new(),
                y,
                noisy,
            }
        })
        .collect();
    Ok(NoisyDataset {
        records,
        k: t.k(),
        p,
        feature_cardinalities: Vec::new(),
        provenance: Provenance {
            model: "iid".into(),
            seed,
            k: t.k(),
            p,
            feature_cardinalities: Vec::new(),
            params: json!({ "n": n, "prior": weights, "T": rows }),
        },
    })
}

/// How part weights `ω(X)` are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightFn {
    /// The same weights for every instance.
    Fixed { weights: Vec<f64> },
    /// `ω(x) = softmax(x · W)` with `W` of shape `S × p`.
    SoftmaxLinear { coefficients: Vec<Vec<f64>> },
}

impl WeightFn {
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            WeightFn::Fixed { weights } => Ok(weights.clone()),
            WeightFn::SoftmaxLinear { coefficients } => {
                if coefficients.len() != x.len() {
                    return Err(Error::Dimension(format!(
                        "weight map expects {} features, got {}",
                        coefficients.len(),
                        x.len()
                    )));
                }
                let parts = coefficients.first().map_or(0, |r| r.len());
                let scores: Vec<f64> = (0..parts)
                    .map(|j| x.iter().zip(coefficients).map(|(xi, row)| xi * row[j]).sum())
                    .collect();
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                let total: f64 = exp.iter().sum();
                Ok(exp.into_iter().map(|e| e / total).collect())
            }
        }
    }
}

/// Transition matrix decomposed into parts mixed by instance-dependent weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PartModel<S: Real = f64> {
    pub parts: Vec<TransitionMatrix<S>>,
    pub weight_fn: WeightFn,
}

impl<S: Real> PartModel<S> {
    pub fn new(parts: Vec<TransitionMatrix<S>>, weight_fn: WeightFn) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::Invalid("part model needs at least one part".into()));
        };
        let k = first.k();
        if parts.iter().any(|t| t.k() != k) {
            return Err(Error::Dimension("parts differ in size".into()));
        }
        if let WeightFn::Fixed { weights } = &weight_fn {
            check_simplex(weights, parts.len())?;
        }
        Ok(Self { parts, weight_fn })
    }

    pub fn k(&self) -> usize {
        self.parts[0].k()
    }

    pub fn t_at(&self, x: &[f64]) -> Result<TransitionMatrix<S>> {
        part_dependent_t(&self.weight_fn.weights(x)?, self)
    }
}

fn check_simplex(weights: &[f64], len: usize) -> Result<()> {
    if weights.len() != len {
        return Err(Error::Dimension(format!(
            "{} weights for {len} parts",
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= -STOCHASTIC_TOL)) || (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Invalid(format!(
            "part weights {weights:?} are not on the simplex"
        )));
    }
    Ok(())
}

/// Convex combination `Σ ω_i T_i`.
pub fn part_dependent_t<S: Real>(weights: &[f64], parts: &PartModel<S>) -> Result<TransitionMatrix<S>> {
    check_simplex(weights, parts.parts.len())?;
    let k = parts.k();
    let mut acc = nalgebra::DMatrix::<S>::zeros(k, k);
    for (w, t) in weights.iter().zip(&parts.parts) {
        acc += t.matrix() * S::lit(w.max(0.0));
    }
    TransitionMatrix::new(acc)
}

/// Records with standard-normal features `x` (length `s`), `y ~ prior`, and
/// `p` labels from row `y` of `T(x) = Σ ω_i(x) T_i`.
pub fn sample_part_dependent<S: Real>(
    prior: &Prior<S>,
    parts: &PartModel<S>,
    s: usize,
    p: usize,
    n: usize,
    seed: u64,
) -> Result<NoisyDataset> {
    use rand_distr::{Distribution, StandardNormal};
    if p == 0 || n == 0 {
        return Err(Error::Invalid("need p >= 1 and n >= 1".into()));
    }
    if prior.k() != parts.k() {
        return Err(Error::Dimension("prior and parts disagree on K".into()));
    }
    let weights = prior.to_vec();
    let mut rng = seeded(seed);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut rng)).collect();
        let t = parts.t_at(&x)?;
        let y = categorical(&mut rng, &weights);
        let row: Vec<f64> = t.row(y).iter().map(|v| v.as_f64()).collect();
        let noisy = (0..p).map(|_| categorical(&mut rng, &row)).collect();
        records.push(Record {
            x,
            r: Vec::new(),
            y,
            noisy,
        });
    }
    let parts_rows: Vec<Vec<Vec<f64>>> = parts.parts.iter().map(|t| t.to_rows()).collect();
    Ok(NoisyDataset {
        records,
        k: parts.k(),
        p,
        feature_cardinalities: Vec::new(),
        provenance: Provenance {
            model: "part_dependent".into(),
            seed,
            k: parts.k(),
            p,
            feature_cardinalities: Vec::new(),
            params: json!({
                "n": n,
                "S": s,
                "prior": weights,
                "parts": parts_rows,
                "weight_fn": parts.weight_fn,
            }),
        },
    })
}

/// Empirical `P̂(Ỹ = j | Y = i)` from the first noisy label column.
pub fn empirical_transition(ds: &NoisyDataset, label: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0u64; ds.k]; ds.k];
    for r in &ds.records {
        counts[r.y][r.noisy[label]] += 1;
    }
    counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_examples() {
        let t = asymmetric_t::<f64>(3, 0.3).unwrap();
        assert_eq!(
            t.to_rows(),
            vec![vec![0.7, 0.3, 0.0], vec![0.0, 0.7, 0.3], vec![0.3, 0.0, 0.7]]
        );
        assert_eq!(asymmetric_t::<f64>(4, 0.0).unwrap(), TransitionMatrix::identity(4).unwrap());
        let t2 = asymmetric_t::<f64>(2, 0.2).unwrap();
        assert!((t2.get(0, 0) - 0.8).abs() < 1e-15 && (t2.get(1, 0) - 0.2).abs() < 1e-15);
        assert!(asymmetric_t::<f64>(3, 1.2).is_err());
    }

    #[test]
    fn identity_noise_copies_clean_label() {
        let ds = sample_iid_noisy(
            &Prior::<f64>::from_f64(&[0.2, 0.5, 0.3]).unwrap(),
            &TransitionMatrix::identity(3).unwrap(),
            4,
            500,
            1,
        )
        .unwrap();
        assert!(ds.records.iter().all(|r| r.noisy.iter().all(|&l| l == r.y)));
        assert_eq!(ds.provenance.seed, 1);
    }

    #[test]
    fn same_seed_same_data() {
        let prior = Prior::<f64>::from_f64(&[0.7, 0.3]).unwrap();
        let t = asymmetric_t(2, 0.2).unwrap();
        let a = sample_iid_noisy(&prior, &t, 3, 200, 42).unwrap();
        let b = sample_iid_noisy(&prior, &t, 3, 200, 42).unwrap();
        let c = sample_iid_noisy(&prior, &t, 3, 200, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn part_dependent_examples() {
        let parts = PartModel::<f64>::new(
            vec![
                TransitionMatrix::identity(2).unwrap(),
                TransitionMatrix::uniform(2).unwrap(),
            ],
            WeightFn::Fixed {
                weights: vec![0.5, 0.5],
            },
        )
        .unwrap();
        let t = part_dependent_t(&[0.5, 0.5], &parts).unwrap();
        assert_eq!(t.to_rows(), vec![vec![0.75, 0.25], vec![0.25, 0.75]]);
        assert_eq!(part_dependent_t(&[0.0, 1.0], &parts).unwrap(), parts.parts[1]);
        assert!(part_dependent_t(&[0.6, 0.6], &parts).is_err());
        assert!(part_dependent_t(&[1.0], &parts).is_err());
    }

    #[test]
    fn softmax_weights_on_simplex() {
        let w = WeightFn::SoftmaxLinear {
            coefficients: vec![vec![1.0, -1.0, 0.0], vec![0.5, 0.5, 2.0]],
        };
        let v = w.weights(&[0.3, -1.2]).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.weights(&[1.0]).is_err());
    }

    #[test]
    fn part_dependent_sampling_runs() {
        let parts = PartModel::<f64>::new(
            vec![asymmetric_t(3, 0.2).unwrap(), TransitionMatrix::identity(3).unwrap()],
            WeightFn::SoftmaxLinear {
                coefficients: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
        )
        .unwrap();
        let ds = sample_part_dependent(&Prior::uniform(3).unwrap(), &parts, 2, 3, 100, 5).unwrap();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.feature_len(), 2);
        ds.validate().unwrap();
    }
}
