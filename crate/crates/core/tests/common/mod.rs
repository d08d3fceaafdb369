#![allow(dead_code)]

use noise_id::rng::{dirichlet_flat, seeded, SeededRng};
use noise_id::{ObsMatrix, Prior, Scenario, TransitionMatrix};
use rand::Rng;

pub fn rng(seed: u64) -> SeededRng {
    seeded(seed)
}

pub fn stochastic_rows(rng: &mut SeededRng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| dirichlet_flat(rng, cols)).collect()
}

/// Random row-stochastic matrix with extra weight on the diagonal, so it is
/// full rank.
pub fn dominant_t(rng: &mut SeededRng, k: usize) -> TransitionMatrix {
    let rows: Vec<Vec<f64>> = stochastic_rows(rng, k, k)
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            r[i] += 1.0;
            r.iter().map(|v| v / 2.0).collect()
        })
        .collect();
    TransitionMatrix::from_rows(&rows).unwrap()
}

pub fn random_t(rng: &mut SeededRng, k: usize) -> TransitionMatrix {
    TransitionMatrix::from_rows(&stochastic_rows(rng, k, k)).unwrap()
}

pub fn random_obs(rng: &mut SeededRng, k: usize, cols: usize) -> ObsMatrix {
    ObsMatrix::from_rows(&stochastic_rows(rng, k, cols)).unwrap()
}

/// Scenario with every prior entry `>= min_prior` and `|det T| >= min_det`,
/// by rejection.
pub fn informative_scenario(rng: &mut SeededRng, k: usize, min_prior: f64, min_det: f64) -> Scenario {
    loop {
        let prior = if k == 2 {
            let g = rng.random_range(0.0..1.0);
            vec![g, 1.0 - g]
        } else {
            dirichlet_flat(rng, k)
        };
        if prior.iter().any(|&p| p < min_prior) {
            continue;
        }
        let t = random_t(rng, k);
        if t.determinant().abs() < min_det {
            continue;
        }
        return Scenario::new(t, Prior::from_f64(&prior).unwrap()).unwrap();
    }
}

pub fn max_abs(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).amax()
}
