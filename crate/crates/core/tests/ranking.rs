use std::collections::BTreeSet;

use proptest::prelude::*;
use seqrank::features::FeatureVector;
use seqrank::pipeline::{SampleSource, SyntheticSource};
use seqrank::ranking::{
    kendall_tau, preference_weights, rpc_predict, rpc_train, weighted_kendall_tau, PrefWeights, PreferenceSample,
    RpcConfig, RpcModel, TauVariant, Voting,
};

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("l{k}")).collect()
}

fn all_perms(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in all_perms(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

fn separable_set() -> Vec<PreferenceSample> {
    let src = SyntheticSource {
        order_noise: 0.0,
        feature_noise: 0.0,
        variants: 1,
        samples_per_variant: 1,
        ..SyntheticSource::default()
    };
    (0..60).flat_map(|id| src.produce(id).unwrap().samples).collect()
}

#[test]
fn separable_pairs_fit_exactly() {
    let data = separable_set();
    // unregularized and run long enough for the margin to open
    let cfg = RpcConfig {
        l2: 0.0,
        learning_rate: 1.0,
        max_iterations: 20_000,
        ..RpcConfig::default()
    };
    let model = rpc_train(&data, &cfg).unwrap();
    assert_eq!(model.pairs.len(), 6);
    for u in &model.pairs {
        let correct = data
            .iter()
            .filter(|s| {
                let z = model.standardization.apply(s.features.as_slice());
                let pi = s.sequence.iter().position(|l| *l == model.labels[u.i]).unwrap();
                let pj = s.sequence.iter().position(|l| *l == model.labels[u.j]).unwrap();
                (u.prob(&z) > 0.5) == (pi < pj)
            })
            .count();
        assert_eq!(correct, data.len(), "pair ({}, {})", u.i, u.j);
    }
}

#[test]
fn duplicating_the_data_changes_nothing() {
    let data = separable_set();
    let mut twice = data.clone();
    twice.extend(data.iter().cloned());
    let a = rpc_train(&data, &RpcConfig::default()).unwrap();
    let b = rpc_train(&twice, &RpcConfig::default()).unwrap();
    assert_eq!(a.labels, b.labels);
    for (x, y) in a.pairs.iter().zip(&b.pairs) {
        assert!((x.bias - y.bias).abs() < 1e-9);
        for (p, q) in x.weights.iter().zip(&y.weights) {
            assert!((p - q).abs() < 1e-9);
        }
    }
    assert_eq!(a.pref_weights, b.pref_weights);
}

#[test]
fn one_repeated_sample_is_reproduced() {
    let s = PreferenceSample {
        scene_id: 0,
        variant: 0,
        sample_idx: 0,
        features: FeatureVector(vec![0.3, -1.0, 2.0]),
        sequence: vec!["c".into(), "a".into(), "d".into(), "b".into()],
    };
    let data = vec![s.clone(); 5];
    for voting in [Voting::Soft, Voting::Binary] {
        for pref in [false, true] {
            let cfg = RpcConfig {
                voting,
                use_pref_weights: pref,
                ..RpcConfig::default()
            };
            let m = rpc_train(&data, &cfg).unwrap();
            assert_eq!(rpc_predict(&m, &s.features).unwrap().ranking, s.sequence);
        }
    }
}

#[test]
fn stored_weights_pass_through() {
    let mut data: Vec<PreferenceSample> = Vec::new();
    for k in 0..100 {
        let seq = if k < 60 { ["a", "b"] } else { ["b", "a"] };
        data.push(PreferenceSample {
            scene_id: 7,
            variant: 0,
            sample_idx: k,
            features: FeatureVector(vec![k as f64]),
            sequence: seq.iter().map(|s| s.to_string()).collect(),
        });
    }
    let m = rpc_train(&data, &RpcConfig::default()).unwrap();
    let w = m.pref_weights.unwrap();
    assert!((w[0][1] - 0.6).abs() < 1e-12);
    assert!((w[1][0] - 0.4).abs() < 1e-12);
}

#[test]
fn model_json_round_trip_and_validation() {
    let m = rpc_train(&separable_set(), &RpcConfig::default()).unwrap();
    let text = m.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["version", "labels", "voting", "use_pref_weights", "standardization", "pairs", "pref_weights", "meta"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["voting"], "soft");
    assert!(v["meta"].get("trained_scenes").is_some());
    assert_eq!(RpcModel::from_json(&text).unwrap(), m);
    let mut broken = v.clone();
    broken["pairs"].as_array_mut().unwrap().pop();
    assert!(RpcModel::from_json(&broken.to_string()).is_err());
    let short = FeatureVector(vec![0.0; 3]);
    assert!(rpc_predict(&m, &short).is_err());
}

#[test]
fn tau_takes_two_n_minus_one_values() {
    let l = labels(4);
    let perms = all_perms(&l);
    let taus: BTreeSet<i64> = perms
        .iter()
        .flat_map(|a| perms.iter().map(move |b| (a, b)))
        .map(|(a, b)| (kendall_tau(a, b).unwrap() * 1e9).round() as i64)
        .collect();
    assert_eq!(taus.len(), 7);
    // the weighted variant moves continuously with the weights
    let a = &perms[0];
    let b = &perms[1];
    let mut seen = BTreeSet::new();
    for k in 0..=10 {
        let v = 0.5 + 0.05 * k as f64;
        let mut w = PrefWeights::uninformative(&l);
        for i in 0..4 {
            for j in i + 1..4 {
                w.w[i][j] = v;
                w.w[j][i] = 1.0 - v;
            }
        }
        seen.insert((weighted_kendall_tau(a, b, &w, TauVariant::Scaled).unwrap() * 1e9).round() as i64);
    }
    assert_eq!(seen.len(), 11);
}

#[test]
fn random_orders_average_to_zero() {
    // expectation of tau against a fixed order over all permutations
    let l = labels(4);
    let total: f64 = all_perms(&l).iter().map(|p| kendall_tau(&l, p).unwrap()).sum();
    assert!(total.abs() < 1e-12);
}

fn perm_strategy(n: usize) -> impl Strategy<Value = Vec<String>> {
    Just(labels(n)).prop_shuffle()
}

proptest! {
    #[test]
    fn tau_bounds(n in 2usize..7, seed in any::<u64>()) {
        let l = labels(n);
        let mut rev = l.clone();
        rev.reverse();
        prop_assert_eq!(kendall_tau(&l, &l).unwrap(), 1.0);
        prop_assert!((kendall_tau(&l, &rev).unwrap() + 1.0).abs() < 1e-12);
        let _ = seed;
    }

    #[test]
    fn weighted_tau_lies_between_tau_and_one(a in perm_strategy(5), b in perm_strategy(5), v in 0.5f64..=1.0) {
        let l = labels(5);
        let mut w = PrefWeights::uninformative(&l);
        for i in 0..5 {
            for j in i + 1..5 {
                w.w[i][j] = v;
                w.w[j][i] = 1.0 - v;
            }
        }
        let t = kendall_tau(&a, &b).unwrap();
        let tw = weighted_kendall_tau(&a, &b, &w, TauVariant::Scaled).unwrap();
        prop_assert!(tw >= t - 1e-12 && tw <= 1.0 + 1e-12);
        prop_assert!((kendall_tau(&a, &b).unwrap() - kendall_tau(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn weighted_tau_falls_as_weights_sharpen(a in perm_strategy(4), b in perm_strategy(4), v1 in 0.5f64..=1.0, dv in 0.0f64..0.5) {
        let l = labels(4);
        let v2 = (v1 + dv).min(1.0);
        let make = |v: f64| {
            let mut w = PrefWeights::uninformative(&l);
            for i in 0..4 {
                for j in i + 1..4 {
                    w.w[i][j] = v;
                    w.w[j][i] = 1.0 - v;
                }
            }
            w
        };
        let t1 = weighted_kendall_tau(&a, &b, &make(v1), TauVariant::Scaled).unwrap();
        let t2 = weighted_kendall_tau(&a, &b, &make(v2), TauVariant::Scaled).unwrap();
        prop_assert!(t2 <= t1 + 1e-12);
    }

    #[test]
    fn weights_are_complementary(seqs in proptest::collection::vec(perm_strategy(4), 1..30)) {
        let samples: Vec<PreferenceSample> = seqs
            .into_iter()
            .enumerate()
            .map(|(k, s)| PreferenceSample {
                scene_id: 0,
                variant: 0,
                sample_idx: k as u32,
                features: FeatureVector(vec![0.0]),
                sequence: s,
            })
            .collect();
        let w = preference_weights(&samples).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    prop_assert!((w.get(i, j) + w.get(j, i) - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
