use crate::error::{Error, Result};
use crate::matrices::{ObsMatrix, Prior, Scenario};
use crate::dataset::NoisyDataset;
use crate::scalar::Real;

/// Joint distribution of `p` discrete observed variables, stored row-major
/// (the last axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointTensor<S: Real = f64> {
    dims: Vec<usize>,
    values: Vec<S>,
}

impl<S: Real> JointTensor<S> {
    pub fn new(dims: Vec<usize>, values: Vec<S>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::Invalid(format!("invalid tensor dims {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if len != values.len() {
            return Err(Error::Dimension(format!(
                "dims {dims:?} need {len} values, got {}",
                values.len()
            )));
        }
        let mut total = 0.0;
        for v in &values {
            let v = v.as_f64();
            if !v.is_finite() || v < -1e-12 {
                return Err(Error::Invalid(format!("tensor entry {v} is not a probability")));
            }
            total += v;
        }
        let tol = 1e-9f64.max(len as f64 * 8.0 * S::epsilon_f64());
        if (total - 1.0).abs() > tol {
            return Err(Error::Invalid(format!("tensor sums to {total}, expected 1")));
        }
        Ok(Self { dims, values })
    }

    /// Order `p` (number of axes).
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Common per-axis cardinality, if all axes agree.
    pub fn k(&self) -> Option<usize> {
        let k = self.dims[0];
        self.dims.iter().all(|&d| d == k).then_some(k)
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> S {
        self.values[self.flat_index(idx)]
    }

    /// Sums out one axis, giving the joint of the remaining `p - 1` variables.
    pub fn marginalize(&self, axis: usize) -> Result<Self> {
        if axis >= self.order() || self.order() < 2 {
            return Err(Error::Dimension(format!(
                "cannot marginalize axis {axis} of an order-{} tensor",
                self.order()
            )));
        }
        let mut dims = self.dims.clone();
        dims.remove(axis);
        let len: usize = dims.iter().product();
        let mut values = vec![S::zero(); len];
        let out = Self {
            dims: dims.clone(),
            values: Vec::new(),
        };
        for flat in 0..self.values.len() {
            let mut idx = self.multi_index(flat);
            idx.remove(axis);
            values[out.flat_index(&idx)] += self.values[flat];
        }
        Ok(Self { dims, values })
    }

    /// Largest absolute difference between the tensor and any axis transpose.
    pub fn symmetry_deviation(&self) -> f64 {
        if self.k().is_none() {
            return f64::INFINITY;
        }
        let perms = axis_permutations(self.order());
        let mut worst = 0.0f64;
        for flat in 0..self.values.len() {
            let idx = self.multi_index(flat);
            for perm in &perms {
                let permuted: Vec<usize> = perm.iter().map(|&a| idx[a]).collect();
                let d = (self.values[flat] - self.get(&permuted)).abs().as_f64();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Averages the tensor over all axis permutations. Requires equal axes.
    pub fn symmetrize(&self) -> Result<Self> {
        if self.k().is_none() {
            return Err(Error::Dimension(
                "symmetrization needs equal per-axis cardinalities".into(),
            ));
        }
        let perms = axis_permutations(self.order());
        let weight = S::one() / S::lit(perms.len() as f64);
        let values = (0..self.values.len())
            .map(|flat| {
                let idx = self.multi_index(flat);
                let sum = perms.iter().fold(S::zero(), |acc, perm| {
                    let permuted: Vec<usize> = perm.iter().map(|&a| idx[a]).collect();
                    acc + self.get(&permuted)
                });
                sum * weight
            })
            .collect();
        Ok(Self {
            dims: self.dims.clone(),
            values,
        })
    }

    /// Swaps two axes.
    pub fn transpose(&self, a: usize, b: usize) -> Self {
        let mut dims = self.dims.clone();
        dims.swap(a, b);
        let mut out = Self {
            dims,
            values: vec![S::zero(); self.values.len()],
        };
        for flat in 0..self.values.len() {
            let mut idx = self.multi_index(flat);
            idx.swap(a, b);
            let target = out.flat_index(&idx);
            out.values[target] = self.values[flat];
        }
        out
    }

    pub fn to_f64(&self) -> JointTensor<f64> {
        JointTensor {
            dims: self.dims.clone(),
            values: self.values.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

pub(crate) fn axis_permutations(p: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; p], &mut out);
    out
}

/// Forward model for distinct observation matrices:
/// `P(o_1..o_p) = Σ_h prior[h] Π_a M_a[h, o_a]`.
pub fn exact_joint_models<S: Real>(prior: &Prior<S>, models: &[&ObsMatrix<S>]) -> Result<JointTensor<S>> {
    if models.is_empty() {
        return Err(Error::Invalid("need at least one observed variable".into()));
    }
    let k = prior.k();
    if let Some(bad) = models.iter().position(|m| m.hidden() != k) {
        return Err(Error::Dimension(format!(
            "model {bad} has {} hidden states, prior has {k}",
            models[bad].hidden()
        )));
    }
    let dims: Vec<usize> = models.iter().map(|m| m.cardinality()).collect();
    let len: usize = dims.iter().product();
    let shell = JointTensor::<S> {
        dims: dims.clone(),
        values: Vec::new(),
    };
    let values = (0..len)
        .map(|flat| {
            let idx = shell.multi_index(flat);
            (0..k).fold(S::zero(), |acc, h| {
                let prod = models
                    .iter()
                    .zip(&idx)
                    .fold(prior.get(h), |p, (m, &o)| p * m.get(h, o));
                acc + prod
            })
        })
        .collect();
    Ok(JointTensor { dims, values })
}

/// Joint of `p` i.i.d. noisy labels under a scenario.
pub fn exact_joint<S: Real>(s: &Scenario<S>, p: usize) -> Result<JointTensor<S>> {
    if p == 0 {
        return Err(Error::Invalid("p must be at least 1".into()));
    }
    let models = vec![s.t.as_obs(); p];
    exact_joint_models(&s.prior, &models)
}

/// Frequency tensor of the given columns, without symmetrization.
pub fn empirical_joint_columns<S: Real>(columns: &[&[usize]], dims: &[usize]) -> Result<JointTensor<S>> {
    if columns.is_empty() || columns.len() != dims.len() {
        return Err(Error::Dimension("one dimension per column required".into()));
    }
    let n = columns[0].len();
    if n == 0 {
        return Err(Error::Empty("dataset has no records".into()));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("columns differ in length".into()));
    }
    let mut counts = vec![0u64; dims.iter().product()];
    let shell = JointTensor::<S> {
        dims: dims.to_vec(),
        values: Vec::new(),
    };
    let mut idx = vec![0; dims.len()];
    for r in 0..n {
        for (a, col) in columns.iter().enumerate() {
            if col[r] >= dims[a] {
                return Err(Error::Invalid(format!(
                    "record {r}: value {} out of range for axis {a} (cardinality {})",
                    col[r], dims[a]
                )));
            }
            idx[a] = col[r];
        }
        counts[shell.flat_index(&idx)] += 1;
    }
    let inv = 1.0 / n as f64;
    Ok(JointTensor {
        dims: dims.to_vec(),
        values: counts.iter().map(|&c| S::lit(c as f64 * inv)).collect(),
    })
}

/// Frequency tensor of the noisy-label tuples, symmetrized over axes since
/// the labels are exchangeable.
pub fn empirical_joint<S: Real>(ds: &NoisyDataset) -> Result<JointTensor<S>> {
    if ds.records.is_empty() {
        return Err(Error::Empty("dataset has no records".into()));
    }
    if ds.p == 0 {
        return Err(Error::Invalid("dataset has no noisy labels".into()));
    }
    let columns: Vec<Vec<usize>> = (0..ds.p)
        .map(|i| ds.records.iter().map(|r| r.noisy[i]).collect())
        .collect();
    let refs: Vec<&[usize]> = columns.iter().map(|c| c.as_slice()).collect();
    empirical_joint_columns::<S>(&refs, &vec![ds.k; ds.p])?.symmetrize()
}
