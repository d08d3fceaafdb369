//! Moment matching for latent class models over probability simplices.
//!
//! Fits a prior and a set of row-stochastic observation matrices so that the
//! forward model `Σ_h prior[h] Π_a M_{m(a)}[h, o_a]` matches a target joint
//! tensor in squared Frobenius norm. Several axes may share a matrix (i.i.d.
//! noisy labels) or each axis may own one (features plus a label).
//!
//! Each restart runs a projected Levenberg-Marquardt iteration: the Jacobian
//! is restricted to the tangent space of each simplex block (one coordinate
//! per block is eliminated, the largest one), the damped Gauss-Newton step is
//! taken, and each block is projected back onto its simplex.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::joint::JointTensor;
use crate::error::{Error, Result};
use crate::rng::{dirichlet_flat, substream};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the squared residual falls below this.
    pub residual_floor: f64,
    /// Stop once an accepted step moves no coordinate by more than this.
    pub step_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 5000,
            residual_floor: 1e-30,
            step_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualFloor,
    Stationary,
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub residual: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

/// Structure of the latent class model being fitted.
#[derive(Debug, Clone)]
pub struct LatentClassModel {
    pub k: usize,
    /// For each tensor axis, the index of the matrix generating it.
    pub axis_model: Vec<usize>,
    /// Column count of each matrix.
    pub model_cards: Vec<usize>,
}

impl LatentClassModel {
    /// `p` exchangeable observations sharing one `K × K` matrix.
    pub fn shared(k: usize, p: usize) -> Self {
        Self {
            k,
            axis_model: vec![0; p],
            model_cards: vec![k],
        }
    }

    /// One distinct matrix per axis.
    pub fn distinct(k: usize, cards: &[usize]) -> Self {
        Self {
            k,
            axis_model: (0..cards.len()).collect(),
            model_cards: cards.to_vec(),
        }
    }

    fn dims(&self) -> Vec<usize> {
        self.axis_model.iter().map(|&m| self.model_cards[m]).collect()
    }

    fn n_params(&self) -> usize {
        self.k + self.model_cards.iter().map(|c| self.k * c).sum::<usize>()
    }

    fn model_offset(&self, m: usize) -> usize {
        self.k + self.model_cards[..m].iter().map(|c| self.k * c).sum::<usize>()
    }

    /// `(offset, len)` of each simplex block in the flat parameter vector.
    fn blocks(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(0, self.k)];
        for (m, &c) in self.model_cards.iter().enumerate() {
            let off = self.model_offset(m);
            for h in 0..self.k {
                out.push((off + h * c, c));
            }
        }
        out
    }
}

/// Fitted parameters plus diagnostics.
#[derive(Debug, Clone)]
pub struct LatentClassFit<S: Real = f64> {
    pub prior: Vec<S>,
    pub models: Vec<DMatrix<S>>,
    /// Squared Frobenius residual of the best restart.
    pub residual: S,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex<S: Real>(v: &mut [S]) {
    let mut sorted: Vec<S> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = S::zero();
    let mut theta = S::zero();
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - S::one()) / S::lit((i + 1) as f64);
        if u - t > S::zero() {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(S::zero());
    }
}

struct Problem<'a, S: Real> {
    model: &'a LatentClassModel,
    target: &'a [S],
    dims: Vec<usize>,
    blocks: Vec<(usize, usize)>,
}

impl<S: Real> Problem<'_, S> {
    fn cell_index(&self, mut flat: usize, idx: &mut [usize]) {
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
    }

    #[inline]
    fn entry(&self, theta: &[S], m: usize, h: usize, o: usize) -> S {
        theta[self.model.model_offset(m) + h * self.model.model_cards[m] + o]
    }

    fn residual(&self, theta: &[S]) -> DVector<S> {
        let k = self.model.k;
        let mut idx = vec![0; self.dims.len()];
        DVector::from_fn(self.target.len(), |flat, _| {
            self.cell_index(flat, &mut idx);
            let mut v = S::zero();
            for h in 0..k {
                let mut prod = theta[h];
                for (a, &o) in idx.iter().enumerate() {
                    prod *= self.entry(theta, self.model.axis_model[a], h, o);
                }
                v += prod;
            }
            v - self.target[flat]
        })
    }

    fn cost(&self, theta: &[S]) -> S {
        self.residual(theta).norm_squared()
    }

    fn jacobian(&self, theta: &[S]) -> DMatrix<S> {
        let k = self.model.k;
        let p = self.dims.len();
        let mut jac = DMatrix::zeros(self.target.len(), self.model.n_params());
        let mut idx = vec![0; p];
        let mut terms = vec![S::zero(); p];
        for flat in 0..self.target.len() {
            self.cell_index(flat, &mut idx);
            for h in 0..k {
                for a in 0..p {
                    terms[a] = self.entry(theta, self.model.axis_model[a], h, idx[a]);
                }
                let all: S = terms.iter().fold(S::one(), |acc, &t| acc * t);
                jac[(flat, h)] += all;
                for a in 0..p {
                    let others = terms
                        .iter()
                        .enumerate()
                        .filter(|&(b, _)| b != a)
                        .fold(theta[h], |acc, (_, &t)| acc * t);
                    let m = self.model.axis_model[a];
                    let col = self.model.model_offset(m) + h * self.model.model_cards[m] + idx[a];
                    jac[(flat, col)] += others;
                }
            }
        }
        jac
    }

    fn project(&self, theta: &mut [S]) {
        for &(off, len) in &self.blocks {
            project_simplex(&mut theta[off..off + len]);
        }
    }

    /// Per block, the eliminated coordinate and the kept ones.
    fn tangent_layout(&self, theta: &[S]) -> Vec<(usize, Vec<usize>)> {
        self.blocks
            .iter()
            .map(|&(off, len)| {
                let mut elim = off;
                for i in off..off + len {
                    if theta[i] > theta[elim] {
                        elim = i;
                    }
                }
                let kept = (off..off + len).filter(|&i| i != elim).collect();
                (elim, kept)
            })
            .collect()
    }

    fn run(&self, mut theta: Vec<S>, options: &SolverOptions, index: usize) -> (Vec<S>, RestartSummary) {
        self.project(&mut theta);
        let mut cost = self.cost(&theta);
        let mut mu: Option<S> = None;
        let mut iterations = 0;
        let mut stop = StopReason::MaxIterations;
        let floor = S::lit(options.residual_floor);
        let step_tol = S::lit(options.step_tol);

        'outer: while iterations < options.max_iter {
            if cost <= floor {
                stop = StopReason::ResidualFloor;
                break;
            }
            iterations += 1;
            let r = self.residual(&theta);
            let jac = self.jacobian(&theta);
            let layout = self.tangent_layout(&theta);
            let n_red: usize = layout.iter().map(|(_, kept)| kept.len()).sum();
            let mut jr = DMatrix::zeros(jac.nrows(), n_red);
            let mut col = 0;
            for (elim, kept) in &layout {
                for &i in kept {
                    let c = jac.column(i) - jac.column(*elim);
                    jr.set_column(col, &c);
                    col += 1;
                }
            }
            let a = jr.transpose() * &jr;
            let g = jr.transpose() * &r;
            let scale = a.diagonal().iter().copied().fold(S::zero(), |x, y| x.max(y))
                + S::lit(S::epsilon_f64());
            let mut damping = mu.unwrap_or(scale * S::lit(1e-3));

            loop {
                let mut lhs = a.clone();
                for i in 0..n_red {
                    lhs[(i, i)] += damping;
                }
                let Some(chol) = lhs.cholesky() else {
                    damping *= S::lit(4.0);
                    if damping > scale * S::lit(1e20) {
                        stop = StopReason::Stalled;
                        break 'outer;
                    }
                    continue;
                };
                let delta = chol.solve(&(-&g));
                let mut trial = theta.clone();
                let mut j = 0;
                for (elim, kept) in &layout {
                    let mut total = S::zero();
                    for &i in kept {
                        trial[i] += delta[j];
                        total += delta[j];
                        j += 1;
                    }
                    trial[*elim] -= total;
                }
                self.project(&mut trial);
                let trial_cost = self.cost(&trial);
                if trial_cost < cost {
                    let moved = theta
                        .iter()
                        .zip(&trial)
                        .fold(S::zero(), |m, (x, y)| m.max((*x - *y).abs()));
                    theta = trial;
                    cost = trial_cost;
                    mu = Some((damping / S::lit(3.0)).max(scale * S::lit(1e-15)));
                    if moved <= step_tol {
                        stop = StopReason::Stationary;
                        break 'outer;
                    }
                    break;
                }
                damping *= S::lit(4.0);
                if damping > scale * S::lit(1e20) {
                    stop = StopReason::Stalled;
                    break 'outer;
                }
            }
        }
        if cost <= floor {
            stop = StopReason::ResidualFloor;
        }
        let summary = RestartSummary {
            index,
            residual: cost.as_f64(),
            iterations,
            stop,
        };
        (theta, summary)
    }
}

fn initial_point<S: Real>(model: &LatentClassModel, seed: u64, index: usize) -> Vec<S> {
    let k = model.k;
    let mut theta = Vec::with_capacity(model.n_params());
    if index == 0 {
        // Uniform prior, rows leaning towards "outcome h" for hidden state h.
        theta.extend(std::iter::repeat_n(S::one() / S::lit(k as f64), k));
        for &c in &model.model_cards {
            for h in 0..k {
                for o in 0..c {
                    let base = 0.4 / c as f64;
                    let v = if o == h % c { 0.6 + base } else { base };
                    theta.push(S::lit(v));
                }
            }
        }
    } else {
        let mut rng = substream(seed, index as u64);
        theta.extend(dirichlet_flat(&mut rng, k).into_iter().map(S::lit));
        for &c in &model.model_cards {
            for _ in 0..k {
                theta.extend(dirichlet_flat(&mut rng, c).into_iter().map(S::lit));
            }
        }
    }
    theta
}

/// Multi-start fit of a latent class model to `target`. Restart `i` draws its
/// starting point from substream `(seed, i)`; the best restart (lowest
/// residual, then lowest index) is returned, independent of scheduling.
pub fn fit_latent_class<S: Real>(
    model: &LatentClassModel,
    target: &JointTensor<S>,
    options: &SolverOptions,
    seed: u64,
) -> Result<LatentClassFit<S>> {
    if model.k < 1 {
        return Err(Error::Invalid("need at least one hidden state".into()));
    }
    if model.dims() != target.dims() {
        return Err(Error::Dimension(format!(
            "model implies tensor dims {:?}, target has {:?}",
            model.dims(),
            target.dims()
        )));
    }
    if options.restarts == 0 {
        return Err(Error::Invalid("need at least one restart".into()));
    }
    let problem = Problem {
        model,
        target: target.values(),
        dims: model.dims(),
        blocks: model.blocks(),
    };
    let runs: Vec<(Vec<S>, RestartSummary)> = (0..options.restarts)
        .into_par_iter()
        .map(|i| problem.run(initial_point(model, seed, i), options, i))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            a.1.residual
                .partial_cmp(&b.1.residual)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(j))
        })
        .map(|(i, _)| i)
        .expect("at least one restart");
    let theta = &runs[best].0;
    let k = model.k;
    let prior = theta[..k].to_vec();
    let models = model
        .model_cards
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            let off = model.model_offset(m);
            DMatrix::from_fn(k, c, |h, o| theta[off + h * c + o])
        })
        .collect();
    Ok(LatentClassFit {
        prior,
        models,
        residual: S::lit(runs[best].1.residual),
        best_restart: best,
        restarts: runs.into_iter().map(|(_, s)| s).collect(),
    })
}
