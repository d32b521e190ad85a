use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{preference_weights, PreferenceSample, PrefWeights};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Voting {
    Binary,
    #[default]
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpcConfig {
    pub voting: Voting,
    pub use_pref_weights: bool,
    pub l2: f64,
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub gradient_tol: f64,
}

impl Default for RpcConfig {
    fn default() -> Self {
        Self {
            voting: Voting::Soft,
            use_pref_weights: false,
            l2: 1e-3,
            learning_rate: 0.1,
            max_iterations: 500,
            gradient_tol: 1e-6,
        }
    }
}

impl RpcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.learning_rate > 0.0 && self.gradient_tol >= 0.0) {
            return Err(Error::InvalidConfig(format!("bad training hyperparameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    fn fit(rows: &[&[f64]]) -> Self {
        let d = rows[0].len();
        let m = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (a, v) in mean.iter_mut().zip(r.iter()) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m);
        let mut std = vec![0.0; d];
        for r in rows {
            for k in 0..d {
                std[k] += (r[k] - mean[k]).powi(2);
            }
        }
        // constant columns pass through centered but unscaled
        std.iter_mut().for_each(|s| {
            let v = (*s / m).sqrt();
            *s = if v > 1e-12 { v } else { 1.0 };
        });
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Logistic unit predicting that label `i` precedes label `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairUnit {
    pub i: usize,
    pub j: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PairUnit {
    pub fn prob(&self, z: &[f64]) -> f64 {
        sigmoid(self.bias + self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub trained_scenes: usize,
    pub test_tau_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcModel {
    pub version: u32,
    pub labels: Vec<String>,
    pub voting: Voting,
    pub use_pref_weights: bool,
    pub standardization: Standardization,
    pub pairs: Vec<PairUnit>,
    pub pref_weights: Option<Vec<Vec<f64>>>,
    pub meta: ModelMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Labels, most preferred first.
    pub ranking: Vec<String>,
    /// Vote sums in label order.
    pub scores: Vec<f64>,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn train_unit(z: &[Vec<f64>], y: &[f64], cfg: &RpcConfig) -> (Vec<f64>, f64) {
    let d = z[0].len();
    let m = z.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut gw = vec![0.0; d];
    for _ in 0..cfg.max_iterations {
        gw.iter_mut().zip(&w).for_each(|(g, wk)| *g = cfg.l2 * wk * m);
        let mut gb = 0.0;
        for (x, t) in z.iter().zip(y) {
            let r = sigmoid(b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()) - t;
            gb += r;
            gw.iter_mut().zip(x).for_each(|(g, c)| *g += r * c);
        }
        gw.iter_mut().for_each(|g| *g /= m);
        gb /= m;
        let norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if norm < cfg.gradient_tol {
            break;
        }
        w.iter_mut().zip(&gw).for_each(|(wk, g)| *wk -= cfg.learning_rate * g);
        b -= cfg.learning_rate * gb;
    }
    (w, b)
}

/// Checks a common label set and feature width; returns the sorted labels.
pub(crate) fn check_samples(samples: &[PreferenceSample]) -> Result<Vec<String>> {
    let first = samples.first().ok_or(Error::EmptyInput("training samples"))?;
    let mut labels = first.sequence.clone();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::LabelMismatch(format!("repeated label in {:?}", first.sequence)));
    }
    let width = first.features.len();
    for s in samples {
        let mut l = s.sequence.clone();
        l.sort();
        if l != labels {
            return Err(Error::LabelMismatch(format!("{:?} vs {:?}", s.sequence, labels)));
        }
        if s.features.len() != width {
            return Err(Error::LengthMismatch {
                expected: width,
                got: s.features.len(),
            });
        }
    }
    Ok(labels)
}

/// Preference weights per scene, averaged over scenes.
pub fn scene_averaged_weights(samples: &[PreferenceSample]) -> Result<PrefWeights> {
    let mut by_scene: BTreeMap<u64, Vec<PreferenceSample>> = BTreeMap::new();
    for s in samples {
        by_scene.entry(s.scene_id).or_default().push(s.clone());
    }
    let parts = by_scene
        .values()
        .map(|g| preference_weights(g))
        .collect::<Result<Vec<_>>>()?;
    PrefWeights::mean(&parts)
}

pub fn rpc_train(samples: &[PreferenceSample], cfg: &RpcConfig) -> Result<RpcModel> {
    cfg.validate()?;
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let labels = check_samples(samples)?;
    if labels.len() < 2 {
        return Err(Error::InvalidConfig("ranking needs at least two labels".into()));
    }
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.features.as_slice()).collect();
    let standardization = Standardization::fit(&rows);
    let z: Vec<Vec<f64>> = rows.iter().map(|r| standardization.apply(r)).collect();
    let positions: Vec<Vec<usize>> = samples
        .iter()
        .map(|s| {
            let mut pos = vec![0; labels.len()];
            for (k, l) in s.sequence.iter().enumerate() {
                pos[labels.binary_search(l).expect("checked label")] = k;
            }
            pos
        })
        .collect();
    let n = labels.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let y: Vec<f64> = positions.iter().map(|p| if p[i] < p[j] { 1.0 } else { 0.0 }).collect();
            let (weights, bias) = train_unit(&z, &y, cfg);
            pairs.push(PairUnit { i, j, weights, bias });
        }
    }
    let pref = scene_averaged_weights(samples)?;
    let scenes: BTreeSet<u64> = samples.iter().map(|s| s.scene_id).collect();
    Ok(RpcModel {
        version: MODEL_VERSION,
        labels,
        voting: cfg.voting,
        use_pref_weights: cfg.use_pref_weights,
        standardization,
        pairs,
        pref_weights: Some(pref.w),
        meta: ModelMeta {
            trained_scenes: scenes.len(),
            test_tau_w: None,
        },
    })
}

/// Vote sums and the resulting order from pairwise probabilities `c[i][j]`
/// that `i` precedes `j`.
pub fn vote(labels: &[String], c: &[Vec<f64>], voting: Voting, pref: Option<&[Vec<f64>]>) -> Prediction {
    let n = labels.len();
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let cij = c[i][j];
                    let vote = match voting {
                        Voting::Soft => cij,
                        Voting::Binary => {
                            if cij > 0.5 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                    match pref {
                        Some(w) if cij > 0.5 => w[i][j] * vote,
                        Some(_) => 0.0,
                        None => vote,
                    }
                })
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Prediction {
        ranking: order.into_iter().map(|k| labels[k].clone()).collect(),
        scores,
    }
}

impl RpcModel {
    pub fn feature_len(&self) -> usize {
        self.standardization.mean.len()
    }

    /// Pairwise matrix with `c[j][i] = 1 − c[i][j]`.
    pub fn pairwise(&self, x: &FeatureVector) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.feature_len() {
            return Err(Error::LengthMismatch {
                expected: self.feature_len(),
                got: x.len(),
            });
        }
        let z = self.standardization.apply(x.as_slice());
        let n = self.labels.len();
        let mut c = vec![vec![0.5; n]; n];
        for u in &self.pairs {
            let p = u.prob(&z);
            c[u.i][u.j] = p;
            c[u.j][u.i] = 1.0 - p;
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion(self.version));
        }
        let n = self.labels.len();
        let d = self.feature_len();
        if self.standardization.std.len() != d || self.pairs.len() != n * (n.saturating_sub(1)) / 2 {
            return Err(Error::Format("model arrays have inconsistent sizes".into()));
        }
        if self.pairs.iter().any(|u| u.i >= u.j || u.j >= n || u.weights.len() != d) {
            return Err(Error::Format("malformed pairwise unit".into()));
        }
        if let Some(w) = &self.pref_weights {
            PrefWeights::from_matrix(&self.labels, w.clone())?;
        } else if self.use_pref_weights {
            return Err(Error::Format("model votes with preference weights but stores none".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    /// Writes through a temporary sibling and a rename so readers never see a partial file.
    pub fn save_atomic(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn rpc_predict(model: &RpcModel, x: &FeatureVector) -> Result<Prediction> {
    let c = model.pairwise(x)?;
    let pref = if model.use_pref_weights {
        model.pref_weights.as_deref()
    } else {
        None
    };
    Ok(vote(&model.labels, &c, model.voting, pref))
}
