//! Triplet data from a discrete instance domain.
//!
//! Domain points sit at integer coordinates `0..points`. Each point gets a
//! weight `q_X` drawn uniformly from `λ`, instances are drawn with
//! probability proportional to `q_X`, and every instance forms a triplet
//! with its two nearest other instances when both are within
//! `epsilon_close`. Duplicated points are at distance 0, so a point drawn
//! three or more times yields triplets that share one clean label.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{NoisyDataset, Provenance, Record};
use crate::error::{Error, Result};
use crate::matrices::TransitionMatrix;
use crate::rng::{categorical, substream};

/// How a triplet's single clean label is chosen from its members' labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelAssignment {
    /// Uniformly among the three member labels.
    #[default]
    UniformMember,
    /// The label of the anchor instance `X`.
    Anchor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnstructuredParams {
    pub lambda: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon_close: f64,
    #[serde(rename = "K")]
    pub k: usize,
    /// Domain size; defaults to `lambda.len()`.
    #[serde(default)]
    pub points: Option<usize>,
    /// Clean label per domain point, 1-based; defaults to `(i mod K) + 1`.
    #[serde(default)]
    pub point_labels: Option<Vec<usize>>,
    #[serde(default)]
    pub label_model: LabelAssignment,
    /// Noise transition matrix for the three noisy labels; identity if absent.
    #[serde(rename = "T", default)]
    pub t: Option<Vec<Vec<f64>>>,
}

impl UnstructuredParams {
    pub fn points(&self) -> usize {
        self.points.unwrap_or(self.lambda.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_empty() || self.lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Invalid("lambda entries must be positive".into()));
        }
        if self.n < 3 {
            return Err(Error::Invalid(format!("need N >= 3, got {}", self.n)));
        }
        if !(self.epsilon_close >= 0.0) {
            return Err(Error::Invalid("epsilon_close must be nonnegative".into()));
        }
        if self.k < 2 {
            return Err(Error::Invalid("need K >= 2".into()));
        }
        if self.points() == 0 {
            return Err(Error::Invalid("domain needs at least one point".into()));
        }
        if let Some(labels) = &self.point_labels {
            if labels.len() != self.points() {
                return Err(Error::Dimension(format!(
                    "{} point labels for {} points",
                    labels.len(),
                    self.points()
                )));
            }
            if labels.iter().any(|&l| l == 0 || l > self.k) {
                return Err(Error::Invalid("point labels must be in 1..K".into()));
            }
        }
        self.transition()?;
        Ok(())
    }

    fn transition(&self) -> Result<TransitionMatrix> {
        let t = match &self.t {
            Some(rows) => TransitionMatrix::from_rows(rows)?,
            None => TransitionMatrix::identity(self.k)?,
        };
        if t.k() != self.k {
            return Err(Error::Dimension(format!("T is {0}x{0}, K = {1}", t.k(), self.k)));
        }
        Ok(t)
    }

    fn label_of(&self, point: usize) -> usize {
        match &self.point_labels {
            Some(l) => l[point] - 1,
            None => point % self.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletDataset {
    /// One record per triplet: `x = [anchor coordinate]`, `y` the triplet
    /// label, three noisy labels.
    pub dataset: NoisyDataset,
    /// Instance indices `(X, X₁, X₂)` per triplet.
    pub members: Vec<[usize; 3]>,
    /// Clean labels of the three members.
    pub member_labels: Vec<[usize; 3]>,
    /// Domain point of every drawn instance.
    pub instance_points: Vec<usize>,
    /// Realised `q_X` per domain point.
    pub q: Vec<f64>,
    /// Number of instances drawn at each domain point.
    pub point_counts: Vec<usize>,
    /// `4 Σ q_X / min q_X`.
    pub threshold: f64,
}

/// Sample-size threshold `4 Σ q / min q` above which every point is
/// expected to be drawn often enough to satisfy 2-NN.
pub fn two_nn_threshold(q: &[f64]) -> f64 {
    let total: f64 = q.iter().sum();
    let min = q.iter().copied().fold(f64::INFINITY, f64::min);
    4.0 * total / min
}

/// Triplets of each instance with its two nearest other instances, kept when
/// both distances are `<= eps`. Ties go to the lower index.
pub fn form_triplets(positions: &[f64], eps: f64) -> Vec<[usize; 3]> {
    if positions.len() < 3 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]).then(a.cmp(&b)));
    // Distinct coordinates with their members in index order.
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((pos, members)) if *pos == positions[i] => members.push(i),
            _ => groups.push((positions[i], vec![i])),
        }
    }
    let mut out = Vec::new();
    for (g, (pos, members)) in groups.iter().enumerate() {
        for &x in members {
            let mut cand: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&m| m != x)
                .take(2)
                .map(|&m| (0.0, m))
                .collect();
            let (mut l, mut r) = (g, g + 1);
            while cand.len() < 2 && (l > 0 || r < groups.len()) {
                let dl = (l > 0).then(|| pos - groups[l - 1].0);
                let dr = (r < groups.len()).then(|| groups[r].0 - pos);
                let d = match (dl, dr) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => break,
                };
                if dl == Some(d) {
                    l -= 1;
                    cand.extend(groups[l].1.iter().take(2).map(|&m| (d, m)));
                }
                if dr == Some(d) {
                    cand.extend(groups[r].1.iter().take(2).map(|&m| (d, m)));
                    r += 1;
                }
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if cand.len() >= 2 && cand[1].0 <= eps {
                out.push([x, cand[0].1, cand[1].1]);
            }
        }
    }
    out.sort_unstable_by_key(|t| t[0]);
    out
}

pub fn unstructured_process(params: &UnstructuredParams, seed: u64) -> Result<TripletDataset> {
    params.validate()?;
    let t = params.transition()?;
    let t_rows = t.to_rows();
    let points = params.points();
    let mut rng = substream(seed, 0);
    let q: Vec<f64> = (0..points)
        .map(|_| params.lambda[rand::Rng::random_range(&mut rng, 0..params.lambda.len())])
        .collect();
    let instance_points: Vec<usize> = (0..params.n).map(|_| categorical(&mut rng, &q)).collect();
    let mut point_counts = vec![0; points];
    for &p in &instance_points {
        point_counts[p] += 1;
    }
    let positions: Vec<f64> = instance_points.iter().map(|&p| p as f64).collect();
    let members = form_triplets(&positions, params.epsilon_close);
    let mut rng = substream(seed, 1);
    let mut member_labels = Vec::with_capacity(members.len());
    let mut records = Vec::with_capacity(members.len());
    for m in &members {
        let labels = m.map(|i| params.label_of(instance_points[i]));
        let y = match params.label_model {
            LabelAssignment::UniformMember => labels[rand::Rng::random_range(&mut rng, 0..3)],
            LabelAssignment::Anchor => labels[0],
        };
        let noisy = (0..3).map(|_| categorical(&mut rng, &t_rows[y])).collect();
        records.push(Record {
            x: vec![positions[m[0]]],
            r: Vec::new(),
            y,
            noisy,
        });
        member_labels.push(labels);
    }
    let threshold = two_nn_threshold(&q);
    let dataset = NoisyDataset {
        records,
        k: params.k,
        p: 3,
        feature_cardinalities: Vec::new(),
        provenance: Provenance {
            model: "unstructured".into(),
            seed,
            k: params.k,
            p: 3,
            feature_cardinalities: Vec::new(),
            params: json!({ "params": params, "q": q }),
        },
    };
    Ok(TripletDataset {
        dataset,
        members,
        member_labels,
        instance_points,
        q,
        point_counts,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoNnCheck {
    pub fraction: f64,
    pub triplets: usize,
    pub satisfied: usize,
    pub warning: Option<String>,
}

/// Share of triplets whose three members carry the same clean label. An
/// empty triplet set counts as fully satisfied, with a warning.
pub fn check_2nn(td: &TripletDataset) -> TwoNnCheck {
    let satisfied = td
        .member_labels
        .iter()
        .filter(|l| l[0] == l[1] && l[1] == l[2])
        .count();
    let triplets = td.member_labels.len();
    if triplets == 0 {
        return TwoNnCheck {
            fraction: 1.0,
            triplets,
            satisfied,
            warning: Some("no triplets formed; 2-NN holds vacuously".into()),
        };
    }
    TwoNnCheck {
        fraction: satisfied as f64 / triplets as f64,
        triplets,
        satisfied,
        warning: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: Vec<f64>, n: usize) -> UnstructuredParams {
        UnstructuredParams {
            lambda,
            n,
            epsilon_close: 0.5,
            k: 2,
            points: None,
            point_labels: None,
            label_model: LabelAssignment::UniformMember,
            t: None,
        }
    }

    #[test]
    fn duplicates_pair_with_each_other() {
        let t = form_triplets(&[0.0, 5.0, 0.0, 0.0, 5.0, 5.0], 0.0);
        assert_eq!(t, vec![[0, 2, 3], [1, 4, 5], [2, 0, 3], [3, 0, 2], [4, 1, 5], [5, 1, 4]]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        // Instance 1 at 1.0 has neighbours at distance 1 on both sides.
        let t = form_triplets(&[0.0, 1.0, 2.0, 2.0], 1.0);
        assert!(t.contains(&[1, 0, 2]));
        assert!(t.contains(&[2, 3, 1]));
    }

    #[test]
    fn distinct_points_with_zero_eps_form_nothing() {
        assert!(form_triplets(&[0.0, 1.0, 2.0, 3.0], 0.0).is_empty());
        let mut p = params(vec![1.0], 10);
        p.points = Some(100_000);
        p.epsilon_close = 0.0;
        let td = unstructured_process(&p, 1).unwrap();
        let c = check_2nn(&td);
        assert_eq!(c.fraction, 1.0);
        if c.triplets == 0 {
            assert!(c.warning.is_some());
        }
    }

    #[test]
    fn single_point_always_agrees() {
        let mut p = params(vec![1.0, 3.0], 30);
        p.points = Some(1);
        let td = unstructured_process(&p, 4).unwrap();
        assert_eq!(td.members.len(), 30);
        assert_eq!(check_2nn(&td).fraction, 1.0);
        assert!(td.dataset.records.iter().all(|r| r.noisy.iter().all(|&l| l == r.y)));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(unstructured_process(&params(vec![1.0], 2), 0).is_err());
        assert!(unstructured_process(&params(vec![0.0], 10), 0).is_err());
        let mut p = params(vec![1.0], 10);
        p.point_labels = Some(vec![3]);
        assert!(unstructured_process(&p, 0).is_err());
    }

    #[test]
    fn threshold_formula() {
        assert_eq!(two_nn_threshold(&[1.0, 2.0, 1.0]), 16.0);
    }

    #[test]
    fn params_round_trip() {
        let text = r#"{"lambda":[1,2],"N":100,"epsilon_close":0.5,"K":2,"points":20}"#;
        let p: UnstructuredParams = serde_json::from_str(text).unwrap();
        assert_eq!(p.points(), 20);
        assert!(serde_json::from_str::<UnstructuredParams>(r#"{"lambda":[1],"N":3,"epsilon_close":0,"K":2,"x":1}"#).is_err());
    }
}
