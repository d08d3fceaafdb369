//! Probability matrices, Kruskal rank, numerical rank, Frobenius geometry and
//! permutation alignment.
//!
//! Rows index the hidden state; columns index the observed outcome. All
//! labels are 0-based inside the library.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default relative tolerance for linear-independence and rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Tolerance on row sums of stochastic matrices and on prior totals.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Largest class count accepted by the exhaustive permutation search.
pub const MAX_ALIGN_K: usize = 10;

/// Kruskal rank enumerates row subsets; beyond this many rows it gets slow.
pub const MAX_KRUSKAL_ROWS: usize = 12;

fn stochastic_tol<S: Real>() -> f64 {
    STOCHASTIC_TOL.max(16.0 * S::epsilon_f64())
}

fn validate_stochastic<S: Real>(m: &DMatrix<S>, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Invalid(format!("{what} must be non-empty")));
    }
    let tol = stochastic_tol::<S>();
    for (i, row) in m.row_iter().enumerate() {
        let mut sum = 0.0;
        for (j, v) in row.iter().enumerate() {
            let v = v.as_f64();
            if !v.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(Error::Invalid(format!(
                    "{what}[{i},{j}] = {v} is not a probability"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > tol {
            return Err(Error::Invalid(format!(
                "{what} row {i} sums to {sum}, expected 1"
            )));
        }
    }
    Ok(())
}

fn dmatrix_from_rows<S: Real>(rows: &[Vec<f64>]) -> Result<DMatrix<S>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Invalid("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged matrix literal".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| S::lit(rows[i][j])))
}

fn dmatrix_to_rows<S: Real>(m: &DMatrix<S>) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.as_f64()).collect())
        .collect()
}

/// A row-stochastic `K × κ` matrix: `M[j, k] = P(O = k | Z = j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsMatrix<S: Real = f64> {
    entries: DMatrix<S>,
}

impl<S: Real> ObsMatrix<S> {
    pub fn new(entries: DMatrix<S>) -> Result<Self> {
        validate_stochastic(&entries, "observation matrix")?;
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(dmatrix_from_rows(rows)?)
    }

    /// Hidden-state count `K`.
    pub fn hidden(&self) -> usize {
        self.entries.nrows()
    }

    /// Observation cardinality `κ`.
    pub fn cardinality(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<S> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> S {
        self.entries[(row, col)]
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.entries.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        dmatrix_to_rows(&self.entries)
    }

    /// Reorders rows so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self {
            entries: permute_rows(&self.entries, perm),
        }
    }

    pub fn kruskal_rank(&self, tol: S) -> usize {
        kruskal_rank(&self.entries, tol)
    }
}

/// A square row-stochastic matrix `T[i, j] = P(Ỹ = j | Y = i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<S: Real = f64>(ObsMatrix<S>);

impl<S: Real> TransitionMatrix<S> {
    pub fn new(entries: DMatrix<S>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension(format!(
                "transition matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() < 2 {
            return Err(Error::Invalid("transition matrix needs K >= 2".into()));
        }
        validate_stochastic(&entries, "transition matrix")?;
        Ok(Self(ObsMatrix { entries }))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(dmatrix_from_rows(rows)?)
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(DMatrix::identity(k, k))
    }

    /// All entries `1/K`.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(k, k, S::one() / S::lit(k as f64)))
    }

    pub fn k(&self) -> usize {
        self.0.hidden()
    }

    pub fn matrix(&self) -> &DMatrix<S> {
        self.0.matrix()
    }

    pub fn get(&self, row: usize, col: usize) -> S {
        self.0.get(row, col)
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.0.row(i)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    pub fn as_obs(&self) -> &ObsMatrix<S> {
        &self.0
    }

    pub fn into_obs(self) -> ObsMatrix<S> {
        self.0
    }

    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self(self.0.permute_rows(perm))
    }

    pub fn trace(&self) -> S {
        self.matrix().trace()
    }

    pub fn determinant(&self) -> S {
        self.matrix().clone().determinant()
    }
}

/// Class prior `P(Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior<S: Real = f64> {
    weights: DVector<S>,
}

impl<S: Real> Prior<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("prior must be non-empty".into()));
        }
        let mut sum = 0.0;
        for (i, w) in weights.iter().enumerate() {
            let w = w.as_f64();
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Invalid(format!("prior[{i}] = {w} is negative")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > stochastic_tol::<S>() {
            return Err(Error::Invalid(format!("prior sums to {sum}, expected 1")));
        }
        Ok(Self {
            weights: DVector::from_vec(weights),
        })
    }

    pub fn from_f64(weights: &[f64]) -> Result<Self> {
        Self::new(weights.iter().map(|&w| S::lit(w)).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![S::one() / S::lit(k as f64); k])
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &DVector<S> {
        &self.weights
    }

    pub fn get(&self, i: usize) -> S {
        self.weights[i]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.as_f64()).collect()
    }

    /// Every class has strictly positive mass.
    pub fn is_non_degenerate(&self) -> bool {
        self.weights.iter().all(|&w| w > S::zero())
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        Self {
            weights: DVector::from_fn(perm.len(), |i, _| self.weights[perm[i]]),
        }
    }
}

/// A parameter point: a transition matrix together with its class prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<S: Real = f64> {
    pub t: TransitionMatrix<S>,
    pub prior: Prior<S>,
}

impl<S: Real> Scenario<S> {
    pub fn new(t: TransitionMatrix<S>, prior: Prior<S>) -> Result<Self> {
        if t.k() != prior.k() {
            return Err(Error::Dimension(format!(
                "transition matrix is {}x{} but prior has {} classes",
                t.k(),
                t.k(),
                prior.k()
            )));
        }
        Ok(Self { t, prior })
    }

    /// Binary scenario in the `(+1, -1)` class order: label index 0 is the
    /// positive class with prior `gamma`, and
    /// `T = [[1 - e₊, e₊], [e₋, 1 - e₋]]`.
    pub fn binary(gamma: f64, e_plus: f64, e_minus: f64) -> Result<Self> {
        let t = TransitionMatrix::from_rows(&[
            vec![1.0 - e_plus, e_plus],
            vec![e_minus, 1.0 - e_minus],
        ])?;
        let prior = Prior::from_f64(&[gamma, 1.0 - gamma])?;
        Self::new(t, prior)
    }

    pub fn k(&self) -> usize {
        self.t.k()
    }

    /// Relabels hidden classes: class `i` of the result is class `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        Self {
            t: self.t.permute_rows(perm),
            prior: self.prior.permute(perm),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRepr {
    prior: Vec<f64>,
    #[serde(rename = "T")]
    t: Vec<Vec<f64>>,
}

macro_rules! serde_as_rows {
    ($ty:ident) => {
        impl<S: Real> Serialize for $ty<S> {
            fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
                self.to_rows().serialize(s)
            }
        }

        impl<'de, S: Real> Deserialize<'de> for $ty<S> {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let rows = Vec::<Vec<f64>>::deserialize(d)?;
                $ty::from_rows(&rows).map_err(D::Error::custom)
            }
        }
    };
}

serde_as_rows!(ObsMatrix);
serde_as_rows!(TransitionMatrix);

impl<S: Real> Serialize for Prior<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de, S: Real> Deserialize<'de> for Prior<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = Vec::<f64>::deserialize(d)?;
        Prior::from_f64(&w).map_err(D::Error::custom)
    }
}

impl<S: Real> Serialize for Scenario<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        ScenarioRepr {
            prior: self.prior.to_vec(),
            t: self.t.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de, S: Real> Deserialize<'de> for Scenario<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ScenarioRepr::deserialize(d)?;
        let t = TransitionMatrix::from_rows(&repr.t).map_err(D::Error::custom)?;
        let prior = Prior::from_f64(&repr.prior).map_err(D::Error::custom)?;
        Scenario::new(t, prior).map_err(D::Error::custom)
    }
}

pub(crate) fn permute_rows<S: Real>(m: &DMatrix<S>, perm: &[usize]) -> DMatrix<S> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], j)])
}

/// Lexicographic iterator over `size`-subsets of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, size: usize) -> Self {
        Self {
            n,
            idx: (0..size).collect(),
            done: size > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let size = self.idx.len();
        let mut i = size;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - size + i {
                self.idx[i] += 1;
                for j in i + 1..size {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

fn singular_values<S: Real>(m: DMatrix<S>) -> Vec<S> {
    m.svd(false, false).singular_values.iter().copied().collect()
}

/// Smallest-to-largest singular-value ratio of a row subset; zero when the
/// subset has more rows than columns.
fn subset_conditioning<S: Real>(m: &DMatrix<S>, rows: &[usize]) -> S {
    if rows.len() > m.ncols() {
        return S::zero();
    }
    let sub = m.select_rows(rows);
    let sv = singular_values(sub);
    let max = sv.iter().copied().fold(S::zero(), |a, b| a.max(b));
    let min = sv.iter().copied().fold(max, |a, b| a.min(b));
    if max <= S::zero() {
        S::zero()
    } else {
        min / max
    }
}

/// Kruskal rank together with how close the decision came to flipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruskalRank<S: Real = f64> {
    pub rank: usize,
    /// Smallest `σ_min / σ_max` among the subsets of size `rank` (all of
    /// which were judged independent). `1` when `rank == 0`.
    pub margin: S,
}

/// Kruskal rank with the conditioning margin of the accepted subsets.
pub fn kruskal_rank_detailed<S: Real>(m: &DMatrix<S>, tol: S) -> KruskalRank<S> {
    let nrows = m.nrows();
    if nrows == 0 {
        return KruskalRank {
            rank: 0,
            margin: S::one(),
        };
    }
    // Rows whose norm vanishes relative to the largest row count as zero.
    let norms: Vec<S> = m.row_iter().map(|r| r.norm()).collect();
    let scale = norms.iter().copied().fold(S::zero(), |a, b| a.max(b));
    if scale <= S::zero() || norms.iter().any(|&n| n <= tol * scale) {
        return KruskalRank {
            rank: 0,
            margin: S::one(),
        };
    }
    let mut rank = 1;
    let mut margin = S::one();
    for size in 2..=nrows.min(m.ncols()) {
        let mut worst = S::one();
        let mut independent = true;
        for subset in Combinations::new(nrows, size) {
            let c = subset_conditioning(m, &subset);
            if c <= tol {
                independent = false;
                break;
            }
            worst = worst.min(c);
        }
        if !independent {
            break;
        }
        rank = size;
        margin = worst;
    }
    KruskalRank { rank, margin }
}

/// Largest `I` such that every `I`-row subset of `m` is linearly independent.
///
/// A subset is independent when its smallest singular value exceeds
/// `tol` times its largest. Returns 0 when some row is numerically zero.
pub fn kruskal_rank<S: Real>(m: &DMatrix<S>, tol: S) -> usize {
    kruskal_rank_detailed(m, tol).rank
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank<S: Real>(m: &DMatrix<S>, tol: S) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = singular_values(m.clone());
    let max = sv.iter().copied().fold(S::zero(), |a, b| a.max(b));
    if max <= S::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

pub fn frobenius_distance<S: Real>(a: &DMatrix<S>, b: &DMatrix<S>) -> Result<S> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "cannot compare {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok((a - b).norm())
}

/// Minimises `Σ_i cost[i][perm[i]]` over permutations by depth-first search
/// in lexicographic order; the first optimum found wins ties.
pub(crate) fn best_permutation(cost: &[Vec<f64>]) -> Vec<usize> {
    fn dfs(
        cost: &[Vec<f64>],
        row: usize,
        used: &mut [bool],
        current: &mut Vec<usize>,
        partial: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        let k = cost.len();
        if partial >= best.0 {
            return;
        }
        if row == k {
            *best = (partial, current.clone());
            return;
        }
        for j in 0..k {
            if used[j] {
                continue;
            }
            used[j] = true;
            current.push(j);
            dfs(cost, row + 1, used, current, partial + cost[row][j], best);
            current.pop();
            used[j] = false;
        }
    }

    let k = cost.len();
    // Shift costs to be nonnegative so partial sums bound the total.
    let min = cost
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let shifted: Vec<Vec<f64>> = cost
        .iter()
        .map(|r| r.iter().map(|c| c - min).collect())
        .collect();
    let mut best = (f64::INFINITY, (0..k).collect::<Vec<_>>());
    dfs(
        &shifted,
        0,
        &mut vec![false; k],
        &mut Vec::with_capacity(k),
        0.0,
        &mut best,
    );
    best.1
}

/// Result of aligning an estimate to a reference by relabeling hidden classes.
#[derive(Debug, Clone)]
pub struct Alignment<S: Real = f64> {
    /// Row `i` of `aligned` is row `permutation[i]` of the input.
    pub permutation: Vec<usize>,
    pub aligned: TransitionMatrix<S>,
    pub distance: S,
}

/// Row permutation of `t_hat` closest to `t_ref` in Frobenius norm.
/// Exhaustive, so limited to `K <= MAX_ALIGN_K`.
pub fn align_permutation<S: Real>(
    t_hat: &TransitionMatrix<S>,
    t_ref: &TransitionMatrix<S>,
) -> Result<Alignment<S>> {
    let k = t_hat.k();
    if t_ref.k() != k {
        return Err(Error::Dimension(format!(
            "cannot align K={k} against K={}",
            t_ref.k()
        )));
    }
    if k > MAX_ALIGN_K {
        return Err(Error::Capability(format!(
            "exhaustive alignment supports K <= {MAX_ALIGN_K}, got {k}"
        )));
    }
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    (0..k)
                        .map(|c| (t_hat.get(j, c) - t_ref.get(i, c)).as_f64().powi(2))
                        .sum()
                })
                .collect()
        })
        .collect();
    let permutation = best_permutation(&cost);
    let aligned = t_hat.permute_rows(&permutation);
    let distance = frobenius_distance(aligned.matrix(), t_ref.matrix())?;
    Ok(Alignment {
        permutation,
        aligned,
        distance,
    })
}

/// Row permutation of `t` maximising the trace (diagonal dominance).
pub fn max_trace_permutation<S: Real>(t: &TransitionMatrix<S>) -> Result<Vec<usize>> {
    let k = t.k();
    if k > MAX_ALIGN_K {
        return Err(Error::Capability(format!(
            "exhaustive alignment supports K <= {MAX_ALIGN_K}, got {k}"
        )));
    }
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| -t.get(j, i).as_f64()).collect())
        .collect();
    Ok(best_permutation(&cost))
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    #[test]
    fn kruskal_rank_counterexample_rows() {
        let m = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0; 2.0, 0.0, 0.0];
        assert_eq!(kruskal_rank(&m, 1e-8), 1);
        assert_eq!(numerical_rank(&m, 1e-8), 2);
    }

    #[test]
    fn kruskal_rank_identity_and_zero_row() {
        for k in 1..=6 {
            let id = DMatrix::<f64>::identity(k, k);
            assert_eq!(kruskal_rank(&id, 1e-8), k);
        }
        let z = dmatrix![1.0, 0.0; 0.0, 0.0; 0.0, 1.0];
        assert_eq!(kruskal_rank(&z, 1e-8), 0);
    }

    #[test]
    fn kruskal_rank_wide_and_tall() {
        // Three rows in two columns: at most 2.
        let m = dmatrix![0.9, 0.1; 0.2, 0.8; 0.5, 0.5];
        assert_eq!(kruskal_rank(&m, 1e-8), 2);
        let wide = dmatrix![0.5, 0.25, 0.25; 0.1, 0.1, 0.8];
        assert_eq!(kruskal_rank(&wide, 1e-8), 2);
    }

    #[test]
    fn kruskal_rank_f32() {
        let m: DMatrix<f32> = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0; 2.0, 0.0, 0.0];
        assert_eq!(kruskal_rank(&m, 1e-5), 1);
        assert_eq!(kruskal_rank(&DMatrix::<f32>::identity(4, 4), 1e-5), 4);
    }

    #[test]
    fn detailed_margin_flags_near_dependence() {
        let m = dmatrix![0.5, 0.5; 0.5 + 1e-6, 0.5 - 1e-6];
        let kr = kruskal_rank_detailed(&m, 1e-8);
        assert_eq!(kr.rank, 2);
        assert!(kr.margin < 1e-5);
    }

    #[test]
    fn numerical_rank_examples() {
        assert_eq!(numerical_rank(&DMatrix::<f64>::identity(3, 3), 1e-8), 3);
        assert_eq!(numerical_rank(&dmatrix![0.5, 0.5; 0.5, 0.5], 1e-8), 1);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(2, 2), 1e-8), 0);
    }

    #[test]
    fn frobenius_examples() {
        let a = dmatrix![1.0, 0.0; 0.0, 1.0];
        let b = dmatrix![0.0, 1.0; 1.0, 0.0];
        assert_abs_diff_eq!(frobenius_distance(&a, &b).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(frobenius_distance(&a, &a).unwrap(), 0.0);
        let c = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            frobenius_distance(&a, &c),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn align_swapped_rows() {
        let t = TransitionMatrix::<f64>::from_rows(&[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.2, 0.2, 0.6],
        ])
        .unwrap();
        let swapped = t.permute_rows(&[1, 0, 2]);
        let a = align_permutation(&swapped, &t).unwrap();
        assert_eq!(a.permutation, vec![1, 0, 2]);
        assert_eq!(a.distance, 0.0);
        let same = align_permutation(&t, &t).unwrap();
        assert_eq!(same.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn align_tie_prefers_lexicographic_first() {
        let u = TransitionMatrix::<f64>::uniform(3).unwrap();
        let a = align_permutation(&u, &u).unwrap();
        assert_eq!(a.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn align_rejects_large_k() {
        let t = TransitionMatrix::<f64>::identity(11).unwrap();
        assert!(matches!(
            align_permutation(&t, &t),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn max_trace_restores_diagonal() {
        let t = TransitionMatrix::<f64>::from_rows(&[
            vec![0.1, 0.9],
            vec![0.8, 0.2],
        ])
        .unwrap();
        let p = max_trace_permutation(&t).unwrap();
        assert_eq!(p, vec![1, 0]);
        assert_abs_diff_eq!(t.permute_rows(&p).trace(), 1.7, epsilon = 1e-15);
    }

    #[test]
    fn validation_rejects_bad_rows() {
        assert!(TransitionMatrix::<f64>::from_rows(&[vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::<f64>::from_rows(&[vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::<f64>::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).is_err());
        assert!(Prior::<f64>::from_f64(&[0.5, 0.4]).is_err());
        assert!(Prior::<f64>::from_f64(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn prior_degeneracy_flag() {
        assert!(Prior::<f64>::from_f64(&[0.5, 0.5]).unwrap().is_non_degenerate());
        assert!(!Prior::<f64>::from_f64(&[1.0, 0.0]).unwrap().is_non_degenerate());
    }

    #[test]
    fn scenario_serde_round_trip() {
        let s = Scenario::<f64>::binary(0.6, 0.1, 0.3).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        assert!(serde_json::from_str::<Scenario>(r#"{"prior":[0.5,0.5],"T":[[1,0],[0,1]],"x":1}"#).is_err());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(Combinations::new(5, 2).count(), 10);
        assert_eq!(Combinations::new(4, 4).count(), 1);
        assert_eq!(Combinations::new(3, 4).count(), 0);
        assert_eq!(
            Combinations::new(4, 2).collect::<Vec<_>>()[0..3],
            [vec![0, 1], vec![0, 2], vec![0, 3]]
        );
    }
}
