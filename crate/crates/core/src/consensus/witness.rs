//! Search for a second binary parameter point with the same two-label
//! statistics.
//!
//! Two exchangeable binary labels leave only two free statistics (the
//! negative consensus is `1 - 2·posterior + pos_consensus`), so the three
//! unknowns `(γ, e₊, e₋)` are pinned only up to a curve. The search walks `γ'`
//! outward from the input and, for each `γ'`, root-finds `(e₊', e₋')` from the
//! posterior and positive-consensus equations with Newton's method.
//!
//! Witnesses are restricted to `γ' ∈ [0.01, 0.99]` and `e₊' + e₋' < 1`. That
//! keeps the prior non-degenerate and the label informative and it excludes
//! the class relabeling of the input, which reproduces the statistics
//! trivially.

use serde::Serialize;

use super::binary::{binary_stats, BinaryStats};
use crate::error::{Error, Result};
use crate::rng::substream;
use rand::Rng;

/// Minimum max-abs distance between witness and input.
pub const WITNESS_MIN_DISTANCE: f64 = 0.01;
/// Required statistic match.
pub const WITNESS_MATCH_TOL: f64 = 1e-8;
const GAMMA_RANGE: (f64, f64) = (0.01, 0.99);
const INFORMATIVE_MARGIN: f64 = 1e-6;
const RANDOM_STARTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryParams {
    pub gamma: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

impl BinaryParams {
    pub fn stats(&self) -> BinaryStats {
        binary_stats(self.gamma, self.e_plus, self.e_minus)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.gamma - other.gamma)
            .abs()
            .max((self.e_plus - other.e_plus).abs())
            .max((self.e_minus - other.e_minus).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub input: BinaryParams,
    pub witness: BinaryParams,
    pub input_stats: BinaryStats,
    pub witness_stats: BinaryStats,
    /// Max-abs difference between the two statistic triples.
    pub residual: f64,
    /// Max-abs distance between the parameter triples.
    pub distance: f64,
    pub gammas_tried: usize,
}

/// `γ'` candidates ordered by growing offset from `gamma`: coarse steps
/// first, then finer ones not already visited.
fn gamma_schedule(gamma: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for step in [0.1f64, 0.05, 0.02, 0.01] {
        let max_m = (1.0 / step).round() as i64;
        for m in 1..=max_m {
            for sign in [1.0, -1.0] {
                let g = gamma + sign * step * m as f64;
                if g < GAMMA_RANGE.0 - 1e-12 || g > GAMMA_RANGE.1 + 1e-12 {
                    continue;
                }
                if out.iter().any(|&x| (x - g).abs() < 1e-9) {
                    continue;
                }
                out.push(g);
            }
        }
    }
    out
}

/// Newton iteration on `(a, b) = (1 - e₊', e₋')` for
/// `γa + (1-γ)b = P` and `γa² + (1-γ)b² = Q`.
fn newton(gamma: f64, target: &BinaryStats, mut a: f64, mut b: f64) -> Option<(f64, f64)> {
    let (p, q) = (target.posterior, target.pos_consensus);
    let g1 = 1.0 - gamma;
    for _ in 0..100 {
        let f1 = gamma * a + g1 * b - p;
        let f2 = gamma * a * a + g1 * b * b - q;
        if f1.abs().max(f2.abs()) < 1e-15 {
            return Some((a, b));
        }
        let (j11, j12, j21, j22) = (gamma, g1, 2.0 * gamma * a, 2.0 * g1 * b);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-14 {
            return None;
        }
        let da = (f1 * j22 - f2 * j12) / det;
        let db = (j11 * f2 - j21 * f1) / det;
        a -= da;
        b -= db;
        if !a.is_finite() || !b.is_finite() || a.abs() > 10.0 || b.abs() > 10.0 {
            return None;
        }
    }
    let f1 = gamma * a + g1 * b - p;
    let f2 = gamma * a * a + g1 * b * b - q;
    (f1.abs().max(f2.abs()) < 1e-12).then_some((a, b))
}

fn admissible(c: &BinaryParams) -> bool {
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    unit(c.e_plus) && unit(c.e_minus) && c.e_plus + c.e_minus < 1.0 - INFORMATIVE_MARGIN
}

/// Finds parameters at distance `>= 0.01` from the input whose two-label
/// statistics match within `1e-8`.
pub fn witness_p2(gamma: f64, e_plus: f64, e_minus: f64, seed: u64) -> Result<Witness> {
    for (name, v) in [("gamma", gamma), ("e_plus", e_plus), ("e_minus", e_minus)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Invalid(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    let input = BinaryParams {
        gamma,
        e_plus,
        e_minus,
    };
    let target = input.stats();
    let mut rng = substream(seed, 0);
    let schedule = gamma_schedule(gamma);
    for (tried, &g) in schedule.iter().enumerate() {
        let mut starts = vec![
            (1.0 - e_plus, e_minus),
            (target.posterior, target.posterior),
            (0.9, 0.1),
            (0.6, 0.4),
        ];
        starts.extend((0..RANDOM_STARTS).map(|_| (rng.random::<f64>(), rng.random::<f64>())));
        for (a0, b0) in starts {
            let Some((a, b)) = newton(g, &target, a0, b0) else {
                continue;
            };
            let cand = BinaryParams {
                gamma: g,
                e_plus: 1.0 - a,
                e_minus: b,
            };
            if !admissible(&cand) {
                continue;
            }
            let distance = cand.distance(&input);
            if distance < WITNESS_MIN_DISTANCE {
                continue;
            }
            let stats = cand.stats();
            let residual = stats.max_abs_diff(&target);
            if residual <= WITNESS_MATCH_TOL {
                return Ok(Witness {
                    input,
                    witness: cand,
                    input_stats: target,
                    witness_stats: stats,
                    residual,
                    distance,
                    gammas_tried: tried + 1,
                });
            }
        }
    }
    Err(Error::SearchExhausted(format!(
        "no admissible witness for (gamma={gamma}, e_plus={e_plus}, e_minus={e_minus}) after {} gamma values",
        schedule.len()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_published_alternative() {
        let w = witness_p2(0.7, 0.2, 0.2, 0).unwrap();
        assert!((w.witness.gamma - 0.8).abs() < 1e-12);
        assert!((w.witness.e_plus - 0.242).abs() < 1e-3);
        assert!((w.witness.e_minus - 0.07).abs() < 1e-3);
        assert!(w.residual <= 1e-8);
    }

    #[test]
    fn clean_corner_exhausts() {
        assert!(matches!(
            witness_p2(1.0, 0.0, 0.0, 0),
            Err(Error::SearchExhausted(_))
        ));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(witness_p2(1.2, 0.0, 0.0, 0), Err(Error::Invalid(_))));
    }

    #[test]
    fn schedule_starts_one_step_up() {
        let s = gamma_schedule(0.7);
        assert!((s[0] - 0.8).abs() < 1e-12);
        assert!((s[1] - 0.6).abs() < 1e-12);
        assert!(s.iter().all(|g| (0.01 - 1e-12..=0.99 + 1e-12).contains(g)));
    }

    #[test]
    fn negative_consensus_follows_from_the_other_two() {
        let s = binary_stats(0.37f64, 0.12, 0.29);
        assert!((s.neg_consensus - (1.0 - 2.0 * s.posterior + s.pos_consensus)).abs() < 1e-15);
    }
}
