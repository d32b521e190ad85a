//! Label ranking by pairwise comparison, preference weights, and the plain
//! and preference-weighted Kendall rank correlations.

mod rpc;
mod tau;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scene::Scene;

pub use rpc::{
    rpc_predict, rpc_train, scene_averaged_weights, vote, ModelMeta, PairUnit, Prediction, RpcConfig, RpcModel,
    Standardization, Voting, MODEL_VERSION,
};
pub use tau::{discordant_pairs, kendall_tau, weighted_kendall_tau, PrefWeights, TauVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSample {
    pub scene_id: u64,
    pub variant: u32,
    pub sample_idx: u32,
    pub features: FeatureVector,
    /// Labels in removal order.
    pub sequence: Vec<String>,
}

/// Ranking label per object: its class, suffixed `#k` when the class repeats
/// (k counts instances in id order).
pub fn scene_labels(scene: &Scene) -> BTreeMap<u32, String> {
    let mut ids = scene.sorted_ids();
    ids.sort_unstable();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &scene.objects {
        *counts.entry(o.class_label.as_str()).or_default() += 1;
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for id in ids {
        let o = scene.object(id).expect("listed id");
        let c = o.class_label.as_str();
        let label = if counts[c] > 1 {
            let k = seen.entry(c).or_default();
            *k += 1;
            format!("{c}#{}", *k - 1)
        } else {
            c.to_string()
        };
        out.insert(id, label);
    }
    out
}

/// Sorted label multiset of a scene; models only apply to matching scenes.
pub fn label_multiset(scene: &Scene) -> Vec<String> {
    let mut l: Vec<String> = scene_labels(scene).into_values().collect();
    l.sort();
    l
}

/// Labels a generated scene over `classes` will carry, sorted.
pub fn labels_for_classes(classes: &[String]) -> Vec<String> {
    let mut c = classes.to_vec();
    c.sort();
    let mut out = Vec::with_capacity(c.len());
    for (k, x) in c.iter().enumerate() {
        let total = c.iter().filter(|y| *y == x).count();
        if total > 1 {
            let before = c[..k].iter().filter(|y| *y == x).count();
            out.push(format!("{x}#{before}"));
        } else {
            out.push(x.clone());
        }
    }
    out.sort();
    out
}

/// `w[i][j]`: share of samples ranking label `i` ahead of label `j`, over sorted labels.
pub fn preference_weights(samples: &[PreferenceSample]) -> Result<PrefWeights> {
    let labels = rpc::check_samples(samples)?;
    let n = labels.len();
    let mut count = vec![vec![0usize; n]; n];
    for s in samples {
        let idx: Vec<usize> = s
            .sequence
            .iter()
            .map(|l| labels.binary_search(l).expect("checked label"))
            .collect();
        for a in 0..n {
            for b in a + 1..n {
                count[idx[a]][idx[b]] += 1;
            }
        }
    }
    let m = samples.len() as f64;
    let mut w = vec![vec![0.5; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            w[i][j] = count[i][j] as f64 / m;
            w[j][i] = 1.0 - w[i][j];
        }
    }
    PrefWeights::from_matrix(&labels, w).map_err(|e| match e {
        Error::InvalidWeights(m) => Error::Format(m),
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose6D, ShapeModel};
    use crate::scene::{ObjectInstance, WorkspaceSpec};

    fn labels(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    fn sample(scene: u64, seq: &[&str], x: Vec<f64>) -> PreferenceSample {
        PreferenceSample {
            scene_id: scene,
            variant: 0,
            sample_idx: 0,
            features: FeatureVector(x),
            sequence: labels(seq),
        }
    }

    #[test]
    fn weights_count_precedence() {
        let mut s: Vec<PreferenceSample> = (0..60).map(|_| sample(0, &["a", "b"], vec![0.0])).collect();
        s.extend((0..40).map(|_| sample(0, &["b", "a"], vec![0.0])));
        let w = preference_weights(&s).unwrap();
        assert!((w.get(0, 1) - 0.6).abs() < 1e-12);
        assert!((w.get(1, 0) - 0.4).abs() < 1e-12);
        let u = preference_weights(&s[..60]).unwrap();
        assert_eq!((u.get(0, 1), u.get(1, 0)), (1.0, 0.0));
        let half = preference_weights(&s[20..100]).unwrap();
        assert_eq!(half.get(0, 1), 0.5);
        assert!(preference_weights(&[]).is_err());
    }

    #[test]
    fn vote_examples() {
        let l = labels(&["1", "2", "3"]);
        let c = vec![vec![0.5, 0.9, 0.8], vec![0.1, 0.5, 0.6], vec![0.2, 0.4, 0.5]];
        let soft = vote(&l, &c, Voting::Soft, None);
        for (a, b) in soft.scores.iter().zip([1.7, 0.7, 0.6]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(soft.ranking, l);
        let bin = vote(&l, &c, Voting::Binary, None);
        assert_eq!(bin.scores, vec![2.0, 1.0, 0.0]);
        assert_eq!(bin.ranking, l);
        let flat = vote(&l, &vec![vec![0.5; 3]; 3], Voting::Soft, None);
        assert_eq!(flat.ranking, l);
        // scaling the probabilities' vote sums keeps the order
        let scaled: Vec<Vec<f64>> = c.iter().map(|r| r.iter().map(|v| v * 3.0).collect()).collect();
        assert_eq!(vote(&l, &scaled, Voting::Soft, None).ranking, soft.ranking);
    }

    #[test]
    fn duplicated_labels_are_disambiguated() {
        let cube = |id| ObjectInstance {
            id,
            class_label: "cube".into(),
            shape: ShapeModel::cuboid(0.1, 0.1, 0.1).unwrap(),
            pose: Pose6D::new(0.2 * id as f64, 0.4, 0.05, 0.0, 0.0, 0.0),
        };
        let mut can = cube(2);
        can.class_label = "can".into();
        let s = Scene::new(WorkspaceSpec::container(), vec![cube(3), can, cube(1)], 0);
        let l = scene_labels(&s);
        assert_eq!(l[&1], "cube#0");
        assert_eq!(l[&3], "cube#1");
        assert_eq!(l[&2], "can");
        assert_eq!(label_multiset(&s), labels(&["can", "cube#0", "cube#1"]));
        assert_eq!(labels_for_classes(&labels(&["cube", "can", "cube"])), label_multiset(&s));
    }
}
