//! Instance-dependent label noise: each instance gets its own flip rate and
//! a feature-driven distribution over the wrong classes.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde_json::json;

use crate::dataset::{NoisyDataset, Provenance, Record};
use crate::error::{Error, Result};
use crate::matrices::Prior;
use crate::rng::{categorical, substream};
use crate::scalar::Real;

/// Standard deviation of the per-instance flip-rate distribution.
pub const FLIP_RATE_SD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceNoise {
    pub noisy: Vec<usize>,
    /// Row `y_n` of `T(x_n)` for every instance.
    pub rows: Vec<Vec<f64>>,
    pub flip_rates: Vec<f64>,
    /// `S × K` projection used for the wrong-class scores.
    pub w: Vec<Vec<f64>>,
}

/// Draws from `N(mean, sd²)` restricted to `[lo, hi]` by rejection.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let normal = Normal::new(mean, sd).expect("sd must be positive and finite");
    loop {
        let v: f64 = normal.sample(rng);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
}

fn validate(features: &[Vec<f64>], clean: &[usize], k: usize) -> Result<usize> {
    if k < 2 {
        return Err(Error::Invalid("need K >= 2".into()));
    }
    if features.is_empty() {
        return Err(Error::Empty("no instances".into()));
    }
    if features.len() != clean.len() {
        return Err(Error::Dimension(format!(
            "{} feature vectors for {} labels",
            features.len(),
            clean.len()
        )));
    }
    let s = features[0].len();
    for (n, x) in features.iter().enumerate() {
        if x.len() != s {
            return Err(Error::Dimension(format!("instance {n} has {} features, expected {s}", x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("instance {n} has a non-finite feature")));
        }
    }
    if let Some(n) = clean.iter().position(|&y| y >= k) {
        return Err(Error::Invalid(format!("instance {n}: label out of range")));
    }
    Ok(s)
}

/// Per-instance label distributions for given flip rates `q` and projection `w`.
/// Entry `y_n` is exactly `1 - q_n`; the remaining mass `q_n` is spread by a
/// softmax of `x_n · W` over the other classes.
pub fn instance_rows(
    features: &[Vec<f64>],
    clean: &[usize],
    q: &[f64],
    w: &[Vec<f64>],
    k: usize,
) -> Result<Vec<Vec<f64>>> {
    let s = validate(features, clean, k)?;
    if q.len() != clean.len() {
        return Err(Error::Dimension("one flip rate per instance required".into()));
    }
    if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Invalid("flip rates must lie in [0, 1]".into()));
    }
    if w.len() != s || w.iter().any(|r| r.len() != k) {
        return Err(Error::Dimension(format!("W must be {s}x{k}")));
    }
    let rows = features
        .iter()
        .zip(clean)
        .zip(q)
        .map(|((x, &y), &qn)| {
            let scores: Vec<f64> = (0..k)
                .map(|j| x.iter().zip(w).map(|(xi, wr)| xi * wr[j]).sum())
                .collect();
            let max = (0..k)
                .filter(|&j| j != y)
                .map(|j| scores[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut row: Vec<f64> = (0..k)
                .map(|j| if j == y { 0.0 } else { (scores[j] - max).exp() })
                .collect();
            let total: f64 = row.iter().sum();
            for v in &mut row {
                *v *= qn / total;
            }
            row[y] = 1.0 - qn;
            row
        })
        .collect();
    Ok(rows)
}

/// Samples one noisy label per instance from explicit flip rates and projection.
pub fn apply_instance_noise(
    features: &[Vec<f64>],
    clean: &[usize],
    q: &[f64],
    w: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<InstanceNoise> {
    let rows = instance_rows(features, clean, q, w, k)?;
    let mut rng = substream(seed, 1);
    let noisy = rows.iter().map(|r| categorical(&mut rng, r)).collect();
    Ok(InstanceNoise {
        noisy,
        rows,
        flip_rates: q.to_vec(),
        w: w.to_vec(),
    })
}

fn draw_parameters(n: usize, s: usize, k: usize, eps: f64, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = substream(seed, 0);
    let w: Vec<Vec<f64>> = (0..s)
        .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let q = (0..n)
        .map(|_| truncated_normal(&mut rng, eps, FLIP_RATE_SD, 0.0, 1.0))
        .collect();
    (q, w)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Invalid(format!("noise rate {eps} is outside [0, 1]")));
    }
    Ok(())
}

/// Instance-dependent noise with flip rates `q_n ~ N(ε, 0.1²)` truncated to
/// `[0, 1]` and a standard-normal `W`.
///
/// `ε = 0` still flips some labels since the truncated normal keeps mass above 0.
pub fn instance_noise(
    features: &[Vec<f64>],
    clean: &[usize],
    eps: f64,
    k: usize,
    seed: u64,
) -> Result<InstanceNoise> {
    check_eps(eps)?;
    let s = validate(features, clean, k)?;
    let (q, w) = draw_parameters(clean.len(), s, k, eps, seed);
    apply_instance_noise(features, clean, &q, &w, k, seed)
}

/// Full dataset under instance-dependent noise: standard-normal features of
/// length `s`, `y ~ prior`, and `p` labels drawn independently from each
/// instance's row. Returns the dataset together with the per-instance rows.
pub fn sample_instance_dataset<S: Real>(
    prior: &Prior<S>,
    eps: f64,
    s: usize,
    p: usize,
    n: usize,
    seed: u64,
) -> Result<(NoisyDataset, InstanceNoise)> {
    check_eps(eps)?;
    if p == 0 || n == 0 || s == 0 {
        return Err(Error::Invalid("need S, p, n >= 1".into()));
    }
    let k = prior.k();
    let weights = prior.to_vec();
    let mut rng = substream(seed, 2);
    let mut features = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for _ in 0..n {
        features.push((0..s).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>());
        clean.push(categorical(&mut rng, &weights));
    }
    let noise = instance_noise(&features, &clean, eps, k, seed)?;
    let mut extra = substream(seed, 3);
    let records = features
        .into_iter()
        .zip(&clean)
        .zip(noise.noisy.iter().zip(&noise.rows))
        .map(|((x, &y), (&first, row))| {
            let mut noisy = Vec::with_capacity(p);
            noisy.push(first);
            noisy.extend((1..p).map(|_| categorical(&mut extra, row)));
            Record {
                x,
                r: Vec::new(),
                y,
                noisy,
            }
        })
        .collect();
    let ds = NoisyDataset {
        records,
        k,
        p,
        feature_cardinalities: Vec::new(),
        provenance: Provenance {
            model: "instance".into(),
            seed,
            k,
            p,
            feature_cardinalities: Vec::new(),
            params: json!({ "n": n, "S": s, "eps": eps, "prior": weights }),
        },
    };
    Ok((ds, noise))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, s: usize, k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let features = (0..n)
            .map(|i| (0..s).map(|j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0).collect())
            .collect();
        let clean = (0..n).map(|i| i % k).collect();
        (features, clean)
    }

    #[test]
    fn full_flip_never_keeps_label() {
        let (x, y) = toy(300, 4, 2);
        let w = vec![vec![0.3, -0.2]; 4];
        let out = apply_instance_noise(&x, &y, &vec![1.0; 300], &w, 2, 9).unwrap();
        assert!(out.noisy.iter().zip(&y).all(|(a, b)| a != b));
    }

    #[test]
    fn zero_projection_is_symmetric() {
        let (x, y) = toy(20, 3, 4);
        let q: Vec<f64> = (0..20).map(|i| i as f64 / 40.0).collect();
        let rows = instance_rows(&x, &y, &q, &vec![vec![0.0; 4]; 3], 4).unwrap();
        for ((row, &yn), &qn) in rows.iter().zip(&y).zip(&q) {
            for (j, &v) in row.iter().enumerate() {
                let want = if j == yn { 1.0 - qn } else { qn / 3.0 };
                assert!((v - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rows_are_distributions() {
        let (x, y) = toy(200, 5, 6);
        let out = instance_noise(&x, &y, 0.3, 6, 1).unwrap();
        for ((row, &yn), &qn) in out.rows.iter().zip(&y).zip(&out.flip_rates) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(row[yn], 1.0 - qn);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (x, y) = toy(5, 2, 3);
        assert!(instance_noise(&x, &y, 1.5, 3, 0).is_err());
        assert!(instance_noise(&x, &y, 0.2, 2, 0).is_err());
        let mut bad = x.clone();
        bad[1][0] = f64::NAN;
        assert!(instance_noise(&bad, &y, 0.2, 3, 0).is_err());
        assert!(instance_noise(&[], &[], 0.2, 3, 0).is_err());
    }

    #[test]
    fn truncated_draws_stay_in_range() {
        let mut rng = substream(3, 0);
        for _ in 0..1000 {
            let v = truncated_normal(&mut rng, 0.0, FLIP_RATE_SD, 0.0, 1.0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn dataset_is_deterministic() {
        let prior = Prior::<f64>::uniform(3).unwrap();
        let (a, _) = sample_instance_dataset(&prior, 0.2, 4, 3, 50, 8).unwrap();
        let (b, _) = sample_instance_dataset(&prior, 0.2, 4, 3, 50, 8).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }
}
