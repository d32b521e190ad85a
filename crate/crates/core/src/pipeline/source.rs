use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{assemble_feature_vector, FeatureVector, VisibilityModel};
use crate::planner::{plan_min_cost_sequence, PlanConfig};
use crate::ranking::{labels_for_classes, scene_labels, PreferenceSample};
use crate::scene::{generate_scene, make_variants, Scene, VariantNoise, WorkspaceSpec};

/// Samples produced for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBatch {
    pub scene_id: u64,
    pub samples: Vec<PreferenceSample>,
    /// Planning runs that found no viable sequence.
    pub skipped: usize,
}

/// Deterministic producer of per-scene sample batches; output depends only on the scene id.
pub trait SampleSource: Send + Sync {
    fn labels(&self) -> Vec<String>;
    fn produce(&self, scene_id: u64) -> Result<SceneBatch>;
}

/// Seed for a derived stream; splitmix-style so neighbouring ids decorrelate.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub variants: usize,
    pub samples_per_variant: usize,
    pub sigma_pos: f64,
    pub sigma_ang: f64,
    /// Pose noise redrawn before every planning run, as a fraction of the variant noise.
    pub run_noise_fraction: f64,
    pub plan: PlanConfig,
}

impl CollectConfig {
    pub fn for_workspace(ws: &WorkspaceSpec) -> Self {
        let v = VariantNoise::for_workspace(ws);
        Self {
            variants: v.count,
            samples_per_variant: 100,
            sigma_pos: v.sigma_pos,
            sigma_ang: v.sigma_ang,
            run_noise_fraction: 0.5,
            plan: PlanConfig::default(),
        }
    }

    fn noise(&self, count: usize, scale: f64) -> VariantNoise {
        VariantNoise {
            count,
            sigma_pos: self.sigma_pos * scale,
            sigma_ang: self.sigma_ang * scale,
        }
    }
}

/// Plans every noisy variant of `scene` repeatedly and pairs the variant's
/// features with each best sequence.
pub fn collect_samples(
    scene: &Scene,
    scene_id: u64,
    vis: &VisibilityModel,
    cfg: &CollectConfig,
    seed: u64,
) -> Result<SceneBatch> {
    if cfg.variants == 0 || cfg.samples_per_variant == 0 {
        return Err(Error::InvalidConfig("variants and samples per variant must be positive".into()));
    }
    scene.validate()?;
    let labels = scene_labels(scene);
    let variants = make_variants(scene, &cfg.noise(cfg.variants, 1.0), mix_seed(seed, 1))?;
    let run_noise = cfg.noise(1, cfg.run_noise_fraction);
    let mut samples = Vec::new();
    let mut skipped = 0;
    for (v, variant) in variants.iter().enumerate() {
        let features = assemble_feature_vector(variant, vis)?;
        for k in 0..cfg.samples_per_variant {
            let run = if run_noise.sigma_pos > 0.0 || run_noise.sigma_ang > 0.0 {
                let s = mix_seed(mix_seed(seed, 2 + v as u64), k as u64);
                make_variants(variant, &run_noise, s)?.remove(0)
            } else {
                variant.clone()
            };
            match plan_min_cost_sequence(&run, &cfg.plan) {
                Ok(r) => samples.push(PreferenceSample {
                    scene_id,
                    variant: v as u32,
                    sample_idx: k as u32,
                    features: features.clone(),
                    sequence: r.best.sequence.iter().map(|id| labels[id].clone()).collect(),
                }),
                Err(Error::NoViableSequence(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let total = cfg.variants * cfg.samples_per_variant;
    if 2 * skipped > total {
        return Err(Error::SceneRejected { skipped, total });
    }
    Ok(SceneBatch {
        scene_id,
        samples,
        skipped,
    })
}

/// Generated scenes over a fixed class list, sampled by mental simulation.
#[derive(Debug, Clone)]
pub struct SimulationSource {
    pub classes: Vec<String>,
    pub workspace: WorkspaceSpec,
    pub visibility: VisibilityModel,
    pub collect: CollectConfig,
    pub seed: u64,
}

impl SimulationSource {
    pub fn scene(&self, scene_id: u64) -> Result<Scene> {
        generate_scene(&self.classes, &self.workspace, mix_seed(self.seed, scene_id))
    }
}

impl SampleSource for SimulationSource {
    fn labels(&self) -> Vec<String> {
        labels_for_classes(&self.classes)
    }

    fn produce(&self, scene_id: u64) -> Result<SceneBatch> {
        let scene = self.scene(scene_id)?;
        collect_samples(&scene, scene_id, &self.visibility, &self.collect, mix_seed(self.seed ^ 0x5eed, scene_id))
    }
}

/// Learnable stand-in for simulation: each label carries one latent score,
/// sequences sort labels by noisy score, features expose the scores among
/// distractor columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    pub labels: usize,
    pub distractors: usize,
    pub variants: usize,
    pub samples_per_variant: usize,
    /// Spread of the per-sample noise added to the latent scores before sorting.
    pub order_noise: f64,
    /// Spread of the per-variant jitter on the observed features.
    pub feature_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        Self {
            labels: 4,
            distractors: 4,
            variants: 3,
            samples_per_variant: 10,
            order_noise: 0.05,
            feature_noise: 0.02,
            seed: 0,
        }
    }
}

impl SampleSource for SyntheticSource {
    fn labels(&self) -> Vec<String> {
        (0..self.labels).map(|k| format!("obj{k}")).collect()
    }

    fn produce(&self, scene_id: u64) -> Result<SceneBatch> {
        let labels = self.labels();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, scene_id));
        let latent: Vec<f64> = (0..self.labels).map(|_| rng.random_range(0.0..1.0)).collect();
        let std = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let distract: Vec<f64> = (0..self.distractors).map(|_| std.sample(&mut rng)).collect();
        let mut samples = Vec::new();
        for v in 0..self.variants {
            let features: Vec<f64> = latent
                .iter()
                .chain(&distract)
                .map(|x| x + self.feature_noise * std.sample(&mut rng))
                .collect();
            for k in 0..self.samples_per_variant {
                let keys: Vec<f64> = latent.iter().map(|x| x + self.order_noise * std.sample(&mut rng)).collect();
                let mut order: Vec<usize> = (0..self.labels).collect();
                order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
                samples.push(PreferenceSample {
                    scene_id,
                    variant: v as u32,
                    sample_idx: k as u32,
                    features: FeatureVector(features.clone()),
                    sequence: order.into_iter().map(|i| labels[i].clone()).collect(),
                });
            }
        }
        Ok(SceneBatch {
            scene_id,
            samples,
            skipped: 0,
        })
    }
}
