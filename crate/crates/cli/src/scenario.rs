use std::path::Path;

use noise_id::features::{gen_feature_model, HiddenSpace};
use noise_id::noisegen::{asymmetric_t, part_dependent_t, PartModel, WeightFn};
use noise_id::{FeatureModel, Prior, Scenario, TransitionMatrix};
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    Asymmetric {
        eps: f64,
    },
    Instance {
        eps: f64,
        #[serde(rename = "S")]
        s: usize,
    },
    PartDependent {
        parts: Vec<Vec<Vec<f64>>>,
        weights: Vec<f64>,
    },
    Explicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub d_star: usize,
    pub cardinalities: Vec<usize>,
    #[serde(default = "two")]
    pub min_kruskal: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub prior: Vec<f64>,
    #[serde(rename = "T", default)]
    pub t: Option<Vec<Vec<f64>>>,
    pub noise_model: NoiseModel,
    #[serde(default)]
    pub features: Option<FeatureSpec>,
    #[serde(default)]
    pub groups: Option<GroupSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: usize,
}

fn default_n() -> usize {
    1000
}

fn default_p() -> usize {
    3
}

/// Reads a JSON document, reporting parse errors as `path:line:column`.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::validation(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let s: Self = read_json(path)?;
        s.validate()?;
        Ok(s)
    }

    /// Checks every invariant that does not need randomness.
    pub fn validate(&self) -> Result<(), Failure> {
        if self.k < 2 {
            return Err(Failure::validation("K must be at least 2"));
        }
        if self.prior.len() != self.k {
            return Err(Failure::validation(format!(
                "prior has {} entries, K = {}",
                self.prior.len(),
                self.k
            )));
        }
        Prior::<f64>::from_f64(&self.prior)?;
        if self.n == 0 || self.p == 0 {
            return Err(Failure::validation("n and p must be at least 1"));
        }
        match &self.noise_model {
            NoiseModel::Explicit if self.t.is_none() => {
                return Err(Failure::validation("explicit noise model needs T"))
            }
            NoiseModel::Explicit => {}
            _ if self.t.is_some() => {
                return Err(Failure::validation("T is only allowed with the explicit noise model"))
            }
            NoiseModel::Instance { s, .. } if *s == 0 => {
                return Err(Failure::validation("instance model needs S >= 1"))
            }
            _ => {}
        }
        if let Some(f) = &self.features {
            if f.cardinalities.len() != f.d_star {
                return Err(Failure::validation(format!(
                    "features: d_star = {} but {} cardinalities",
                    f.d_star,
                    f.cardinalities.len()
                )));
            }
        }
        if let Some(g) = &self.groups {
            if g.count == 0 {
                return Err(Failure::validation("groups.count must be at least 1"));
            }
        }
        if let NoiseModel::Instance { .. } = self.noise_model {
            return Ok(());
        }
        let t = self.transition()?;
        if t.k() != self.k {
            return Err(Failure::validation(format!("T is {0}x{0}, K = {1}", t.k(), self.k)));
        }
        Ok(())
    }

    /// A command-line seed wins over the file's; 0 when neither is given.
    pub fn seed_or(&self, cli: Option<u64>) -> u64 {
        cli.or(self.seed).unwrap_or(0)
    }

    pub fn prior(&self) -> Result<Prior, Failure> {
        Ok(Prior::from_f64(&self.prior)?)
    }

    /// The single transition matrix of the scenario. Instance-dependent noise
    /// has none.
    pub fn transition(&self) -> Result<TransitionMatrix, Failure> {
        match &self.noise_model {
            NoiseModel::Asymmetric { eps } => Ok(asymmetric_t(self.k, *eps)?),
            NoiseModel::Explicit => Ok(TransitionMatrix::from_rows(
                self.t.as_deref().unwrap_or_default(),
            )?),
            NoiseModel::PartDependent { .. } => {
                let (model, weights) = self.part_model()?;
                Ok(part_dependent_t(&weights, &model)?)
            }
            NoiseModel::Instance { .. } => Err(Failure::validation(
                "instance-dependent noise has no single T; use an explicit or asymmetric model",
            )),
        }
    }

    pub fn part_model(&self) -> Result<(PartModel, Vec<f64>), Failure> {
        let NoiseModel::PartDependent { parts, weights } = &self.noise_model else {
            return Err(Failure::validation("not a part-dependent model"));
        };
        let parts = parts
            .iter()
            .map(|rows| TransitionMatrix::from_rows(rows))
            .collect::<Result<Vec<_>, _>>()?;
        let model = PartModel::new(parts, WeightFn::Fixed { weights: weights.clone() })?;
        Ok((model, weights.clone()))
    }

    pub fn scenario(&self) -> Result<Scenario, Failure> {
        Ok(Scenario::new(self.transition()?, self.prior()?)?)
    }

    pub fn hidden_space(&self) -> HiddenSpace {
        match &self.groups {
            Some(g) => HiddenSpace::GroupLabel {
                groups: g.count,
                k: self.k,
            },
            None => HiddenSpace::Labels { k: self.k },
        }
    }

    /// Prior over the hidden space: groups are equally likely and
    /// independent of the label.
    pub fn hidden_prior(&self) -> Result<Prior, Failure> {
        let g = self.groups.as_ref().map_or(1, |g| g.count);
        let w: Vec<f64> = (0..g)
            .flat_map(|_| self.prior.iter().map(move |p| p / g as f64))
            .collect();
        Ok(Prior::from_f64(&w)?)
    }

    pub fn feature_model(&self, seed: u64) -> Result<Option<FeatureModel>, Failure> {
        let Some(f) = &self.features else {
            return Ok(None);
        };
        Ok(Some(gen_feature_model(
            self.hidden_space(),
            &f.cardinalities,
            f.min_kruskal,
            seed,
        )?))
    }
}

/// A matrix file: either a bare nested array or an object with a `T` field.
pub fn read_matrix(path: &Path) -> Result<TransitionMatrix, Failure> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum MatrixFile {
        Rows(Vec<Vec<f64>>),
        Object {
            #[serde(rename = "T")]
            t: Vec<Vec<f64>>,
        },
    }
    let rows = match read_json::<MatrixFile>(path)? {
        MatrixFile::Rows(r) => r,
        MatrixFile::Object { t } => t,
    };
    TransitionMatrix::from_rows(&rows)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}
