use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::compute_visible_cloud;
use crate::error::{Error, Result};
use crate::geometry::{convex_hull_volume, Vec3};
use crate::scene::{generate_scene, Scene, WorkspaceSpec};

pub const MIN_GMM_SAMPLES: usize = 20;
pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const VISIBILITY_MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmConfig {
    pub k_max: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            k_max: 5,
            restarts: 5,
            iterations: 100,
            seed: 0,
        }
    }
}

/// Hull volume of the visible part over the hull volume of the whole cloud.
pub fn visibility_ratio_from_cloud(full: &[Vec3], visible: &[Vec3]) -> Result<f64> {
    if visible.len() < 4 {
        return Ok(0.0);
    }
    let whole = convex_hull_volume(full)?;
    if whole <= 0.0 {
        return Err(Error::DegenerateShape);
    }
    Ok((convex_hull_volume(visible)? / whole).clamp(0.0, 1.0))
}

pub fn visibility_ratio(scene: &Scene, target: u32) -> Result<f64> {
    let obj = scene.object(target).ok_or(Error::UnknownObject(target))?;
    let visible = compute_visible_cloud(scene, target)?;
    visibility_ratio_from_cloud(&obj.world_samples(), &visible)
}

/// One-dimensional Gaussian mixture over visibility ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmEntry {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub n_samples: usize,
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

impl GmmEntry {
    pub fn density(&self, r: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| w * normal_pdf(r, *m, *v))
            .sum()
    }

    pub fn log_likelihood(&self, data: &[f64]) -> f64 {
        data.iter().map(|&x| self.density(x).max(f64::MIN_POSITIVE).ln()).sum()
    }

    pub fn bic(&self, data: &[f64]) -> f64 {
        let params = (3 * self.k - 1) as f64;
        -2.0 * self.log_likelihood(data) + params * (data.len() as f64).ln()
    }

    // negated comparisons so NaN fails too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let ok_len = self.k >= 1
            && self.weights.len() == self.k
            && self.means.len() == self.k
            && self.variances.len() == self.k;
        if !ok_len {
            return Err(Error::Format(format!("mixture with k={} has inconsistent arrays", self.k)));
        }
        let wsum: f64 = self.weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-9 || self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Format(format!("mixture weights sum to {wsum}")));
        }
        if self.variances.iter().any(|v| !(*v >= VARIANCE_FLOOR)) || self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Format("mixture variances below floor or non-finite means".into()));
        }
        Ok(())
    }
}

/// k-means++ seeding of component means.
fn kmeanspp<R: Rng>(data: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let mut centers = vec![data[rng.random_range(0..data.len())]];
    while centers.len() < k {
        let d2: Vec<f64> = data
            .iter()
            .map(|x| centers.iter().map(|c| (x - c).powi(2)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            centers.push(data[rng.random_range(0..data.len())]);
            continue;
        }
        let mut u = rng.random_range(0.0..total);
        let mut pick = data.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if u < *d {
                pick = i;
                break;
            }
            u -= d;
        }
        centers.push(data[pick]);
    }
    centers
}

/// EM from the given means; returns the fit and the per-iteration log-likelihood.
pub fn em_fit(data: &[f64], init_means: &[f64], iterations: usize) -> (GmmEntry, Vec<f64>) {
    let k = init_means.len();
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR);
    let mut g = GmmEntry {
        k,
        weights: vec![1.0 / k as f64; k],
        means: init_means.to_vec(),
        variances: vec![var; k],
        n_samples: data.len(),
    };
    let mut trace = vec![g.log_likelihood(data)];
    let mut resp = vec![0.0; data.len() * k];
    for _ in 0..iterations {
        for (i, &x) in data.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            for j in 0..k {
                row[j] = g.weights[j] * normal_pdf(x, g.means[j], g.variances[j]);
            }
            let s: f64 = row.iter().sum();
            if s > 0.0 && s.is_finite() {
                row.iter_mut().for_each(|r| *r /= s);
            } else {
                // far outlier: hand it to the nearest component
                let near = (0..k)
                    .min_by(|&a, &b| (x - g.means[a]).abs().total_cmp(&(x - g.means[b]).abs()))
                    .unwrap_or(0);
                row.iter_mut().enumerate().for_each(|(j, r)| *r = if j == near { 1.0 } else { 0.0 });
            }
        }
        for j in 0..k {
            let nk: f64 = (0..data.len()).map(|i| resp[i * k + j]).sum();
            if nk <= 1e-12 {
                continue;
            }
            let m = (0..data.len()).map(|i| resp[i * k + j] * data[i]).sum::<f64>() / nk;
            let v = (0..data.len()).map(|i| resp[i * k + j] * (data[i] - m).powi(2)).sum::<f64>() / nk;
            g.weights[j] = nk / n;
            g.means[j] = m;
            g.variances[j] = v.max(VARIANCE_FLOOR);
        }
        let wsum: f64 = g.weights.iter().sum();
        g.weights.iter_mut().for_each(|w| *w /= wsum);
        let ll = g.log_likelihood(data);
        let prev = *trace.last().unwrap_or(&f64::NEG_INFINITY);
        trace.push(ll);
        if (ll - prev).abs() <= 1e-10 * ll.abs().max(1.0) {
            break;
        }
    }
    (g, trace)
}

/// Mixture with the BIC-minimizing component count.
pub fn fit_visibility_gmm(samples: &[f64], cfg: &GmmConfig) -> Result<GmmEntry> {
    if samples.len() < MIN_GMM_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_GMM_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Format("non-finite visibility sample".into()));
    }
    if cfg.k_max == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidConfig("k_max and restarts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(f64, GmmEntry)> = None;
    for k in 1..=cfg.k_max.min(samples.len()) {
        let mut best_k: Option<GmmEntry> = None;
        for _ in 0..cfg.restarts {
            let init = kmeanspp(samples, k, &mut rng);
            let (g, trace) = em_fit(samples, &init, cfg.iterations);
            let ll = *trace.last().unwrap_or(&f64::NEG_INFINITY);
            if best_k.as_ref().is_none_or(|b| ll > b.log_likelihood(samples)) {
                best_k = Some(g);
            }
        }
        let g = best_k.expect("at least one restart");
        let bic = g.bic(samples);
        if best.as_ref().is_none_or(|(b, _)| bic < *b) {
            best = Some((bic, g));
        }
    }
    Ok(best.expect("at least one component count").1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityModel {
    pub version: u32,
    pub classes: BTreeMap<String, GmmEntry>,
}

impl VisibilityModel {
    pub fn new(classes: BTreeMap<String, GmmEntry>) -> Self {
        Self {
            version: VISIBILITY_MODEL_VERSION,
            classes,
        }
    }

    pub fn entry(&self, class: &str) -> Result<&GmmEntry> {
        self.classes.get(class).ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    pub fn density(&self, class: &str, r: f64) -> Result<f64> {
        Ok(self.entry(class)?.density(r))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != VISIBILITY_MODEL_VERSION {
            return Err(Error::UnsupportedVersion(self.version));
        }
        self.classes.values().try_for_each(GmmEntry::validate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Visibility ratios of one class over random single-object placements.
pub fn visibility_corpus(class: &str, ws: &WorkspaceSpec, count: usize, seed: u64) -> Result<Vec<f64>> {
    let classes = [class.to_string()];
    (0..count as u64)
        .map(|i| {
            let s = generate_scene(&classes, ws, seed.wrapping_mul(1_000_003).wrapping_add(i))?;
            visibility_ratio(&s, s.objects[0].id)
        })
        .collect()
}

/// Fits one mixture per class on its placement corpus.
pub fn fit_visibility_model(
    classes: &[String],
    ws: &WorkspaceSpec,
    count: usize,
    cfg: &GmmConfig,
) -> Result<VisibilityModel> {
    let mut sorted = classes.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = BTreeMap::new();
    for (i, c) in sorted.iter().enumerate() {
        let corpus = visibility_corpus(c, ws, count, cfg.seed.wrapping_add(i as u64))?;
        out.insert(c.clone(), fit_visibility_gmm(&corpus, cfg)?);
    }
    Ok(VisibilityModel::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn draws(mean: f64, sd: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(mean, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn peak_density() {
        let g = GmmEntry {
            k: 1,
            weights: vec![1.0],
            means: vec![0.6],
            variances: vec![0.05 * 0.05],
            n_samples: 1,
        };
        assert!((g.density(0.6) - 1.0 / (0.05 * (2.0 * PI).sqrt())).abs() < 1e-9);
        assert!((g.density(0.6) - 7.979).abs() < 1e-3);
        assert!(g.density(0.0) < 1e-10);
        let two = GmmEntry {
            k: 2,
            weights: vec![0.5, 0.5],
            means: vec![0.5, 0.5],
            variances: vec![0.01, 0.04],
            n_samples: 1,
        };
        let avg = 0.5 * (normal_pdf(0.5, 0.5, 0.01) + normal_pdf(0.5, 0.5, 0.04));
        assert!((two.density(0.5) - avg).abs() < 1e-12);
    }

    #[test]
    fn em_never_decreases_likelihood() {
        let mut data = draws(0.3, 0.03, 300, 1);
        data.extend(draws(0.8, 0.05, 200, 2));
        for init in [vec![0.1, 0.2], vec![0.5, 0.55, 0.9], vec![0.4]] {
            let (_, trace) = em_fit(&data, &init, 100);
            for w in trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn constant_data_hits_the_floor() {
        let g = fit_visibility_gmm(&[0.42; 50], &GmmConfig::default()).unwrap();
        assert_eq!(g.k, 1);
        assert_eq!(g.variances, vec![VARIANCE_FLOOR]);
        g.validate().unwrap();
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_visibility_gmm(&[0.5; 19], &GmmConfig::default()),
            Err(Error::InsufficientData { needed: 20, got: 19 })
        ));
    }

    #[test]
    fn full_cloud_is_fully_visible() {
        let shape = crate::geometry::ShapeModel::cuboid(0.1, 0.2, 0.3).unwrap();
        let pts = shape.surface_samples().to_vec();
        assert!((visibility_ratio_from_cloud(&pts, &pts).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(visibility_ratio_from_cloud(&pts, &[]).unwrap(), 0.0);
    }

    #[test]
    fn model_json_round_trip() {
        let g = fit_visibility_gmm(&draws(0.6, 0.05, 100, 3), &GmmConfig::default()).unwrap();
        let m = VisibilityModel::new([("can".to_string(), g)].into_iter().collect());
        let back = VisibilityModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(matches!(m.entry("ball"), Err(Error::UnknownClass(_))));
    }
}
