use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use seqrank::features::{GmmEntry, VisibilityModel};
use seqrank::geometry::{Pose6D, ShapeModel};
use seqrank::pipeline::{
    collect_samples, evaluate_model, optimization_step, produce_batches, read_history_csv, run_optimization_loop,
    split_is_disjoint, CollectConfig, Dataset, LoopConfig, LoopControl, OptimizationState, SampleSource, SceneBatch,
    StepConfig, SyntheticSource, HISTORY_FILE, MODEL_FILE,
};
use seqrank::ranking::{rpc_predict, rpc_train, PreferenceSample, RpcConfig, RpcModel, TauVariant};
use seqrank::scene::{ObjectInstance, Scene, WorkspaceSpec};

const REST: f64 = 5e-7;

fn cube(id: u32, x: f64, y: f64, z: f64) -> ObjectInstance {
    ObjectInstance {
        id,
        class_label: "cube".into(),
        shape: ShapeModel::cuboid(0.1, 0.1, 0.1).unwrap(),
        pose: Pose6D::new(x, y, z, 0.0, 0.0, 0.0),
    }
}

fn flat_vis() -> VisibilityModel {
    let mut m = BTreeMap::new();
    m.insert(
        "cube".to_string(),
        GmmEntry {
            k: 1,
            weights: vec![1.0],
            means: vec![0.5],
            variances: vec![0.1],
            n_samples: 20,
        },
    );
    VisibilityModel::new(m)
}

fn spread_scene() -> Scene {
    Scene::new(
        WorkspaceSpec::container(),
        vec![
            cube(3, 0.15, 0.15, 0.05 + REST),
            cube(1, 0.45, 0.45, 0.05 + REST),
            cube(2, 0.15, 0.45, 0.05 + REST),
        ],
        0,
    )
}

fn loop_cfg(seed: u64, workers: usize) -> LoopConfig {
    LoopConfig {
        initial_scenes: 10,
        scenes_per_step: 5,
        scene_budget: 30,
        workers,
        seed,
        ..LoopConfig::default()
    }
}

#[test]
fn noiseless_collection_is_one_deterministic_sample() {
    let ws = WorkspaceSpec::container();
    let cfg = CollectConfig {
        variants: 1,
        samples_per_variant: 1,
        sigma_pos: 0.0,
        sigma_ang: 0.0,
        ..CollectConfig::for_workspace(&ws)
    };
    let a = collect_samples(&spread_scene(), 4, &flat_vis(), &cfg, 9).unwrap();
    let b = collect_samples(&spread_scene(), 4, &flat_vis(), &cfg, 10).unwrap();
    assert_eq!(a.samples.len(), 1);
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.samples[0].scene_id, 4);
}

#[test]
fn free_objects_always_give_the_tie_broken_order() {
    let ws = WorkspaceSpec::container();
    let cfg = CollectConfig {
        variants: 2,
        samples_per_variant: 3,
        ..CollectConfig::for_workspace(&ws)
    };
    let batch = collect_samples(&spread_scene(), 0, &flat_vis(), &cfg, 1).unwrap();
    assert_eq!(batch.samples.len(), 6);
    assert_eq!(batch.skipped, 0);
    for s in &batch.samples {
        assert_eq!(s.sequence, vec!["cube#0", "cube#1", "cube#2"]);
    }
}

#[test]
fn worker_count_does_not_change_the_result() {
    let src = SyntheticSource {
        seed: 11,
        ..SyntheticSource::default()
    };
    let a = run_optimization_loop(&src, &loop_cfg(11, 1), &LoopControl::default()).unwrap();
    let b = run_optimization_loop(&src, &loop_cfg(11, 4), &LoopControl::default()).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.history, b.history);
    assert_eq!(a.current_model, b.current_model);
    let ids: Vec<u64> = (0..8).collect();
    let x: Vec<_> = produce_batches(&src, &ids, 1).into_iter().map(|(_, b)| b.unwrap()).collect();
    let y: Vec<_> = produce_batches(&src, &ids, 3).into_iter().map(|(_, b)| b.unwrap()).collect();
    assert_eq!(x, y);
}

#[test]
fn audit_trail_balances_and_splits_stay_disjoint() {
    let src = SyntheticSource {
        seed: 2,
        ..SyntheticSource::default()
    };
    let st = run_optimization_loop(&src, &loop_cfg(2, 2), &LoopControl::default()).unwrap();
    let mut running = 0;
    for a in &st.audit {
        assert!(a.kept == 0 || a.kept == a.offered);
        running += a.kept;
        assert_eq!(a.total, running);
    }
    assert_eq!(running, st.dataset.samples.len());
    assert!(split_is_disjoint(&st.dataset));
    let (train, test) = (
        st.dataset.count(seqrank::pipeline::Split::Train),
        st.dataset.count(seqrank::pipeline::Split::Test),
    );
    assert!(test > 0 && train > test);
}

#[test]
fn zero_budget_returns_the_empty_state() {
    let src = SyntheticSource::default();
    let cfg = LoopConfig {
        scene_budget: 0,
        ..LoopConfig::default()
    };
    let st = run_optimization_loop(&src, &cfg, &LoopControl::default()).unwrap();
    assert_eq!(st, OptimizationState::new(src.labels(), 0));
    assert!(st.current_model.is_none());
}

#[test]
fn interrupted_loop_stops_after_the_first_step() {
    let src = SyntheticSource::default();
    let control = LoopControl {
        interrupt: Arc::new(AtomicBool::new(true)),
        ..LoopControl::default()
    };
    let st = run_optimization_loop(&src, &loop_cfg(0, 2), &control).unwrap();
    assert_eq!(st.audit.len(), 1);
    assert_eq!(st.dataset.scene_count(), 10);
}

#[test]
fn every_snapshot_loads_and_predicts() {
    let dir = tempfile::tempdir().unwrap();
    let src = SyntheticSource {
        seed: 5,
        ..SyntheticSource::default()
    };
    let probe = src.produce(1000).unwrap().samples.remove(0);
    let out = dir.path().to_path_buf();
    let seen = Arc::new(AtomicBool::new(false));
    let flag = seen.clone();
    let control = LoopControl {
        may_continue: Some(Box::new(move |st: &OptimizationState| {
            if st.current_model.is_some() {
                let m = RpcModel::load(&out.join(MODEL_FILE)).unwrap();
                assert_eq!(Some(&m), st.current_model.as_ref());
                assert_eq!(rpc_predict(&m, &probe.features).unwrap().ranking.len(), 4);
                flag.store(true, Ordering::SeqCst);
            }
            true
        })),
        ..LoopControl::default()
    };
    let cfg = LoopConfig {
        out_dir: Some(dir.path().to_path_buf()),
        ..loop_cfg(5, 2)
    };
    let st = run_optimization_loop(&src, &cfg, &control).unwrap();
    assert!(seen.load(Ordering::SeqCst));
    assert_eq!(Dataset::load(dir.path()).unwrap(), st.dataset);
    assert_eq!(read_history_csv(&dir.path().join(HISTORY_FILE)).unwrap(), st.history);
}

/// Wraps a source and reverses every sequence of the scenes it flags.
struct Reversing<S> {
    inner: S,
    from: u64,
}

impl<S: SampleSource> SampleSource for Reversing<S> {
    fn labels(&self) -> Vec<String> {
        self.inner.labels()
    }

    fn produce(&self, scene_id: u64) -> seqrank::Result<SceneBatch> {
        let mut b = self.inner.produce(scene_id)?;
        if scene_id >= self.from {
            for s in &mut b.samples {
                s.sequence.reverse();
            }
        }
        Ok(b)
    }
}

#[test]
fn adversarial_scenes_are_rejected() {
    let src = Reversing {
        inner: SyntheticSource {
            seed: 4,
            ..SyntheticSource::default()
        },
        from: 20,
    };
    let cfg = StepConfig::default();
    let mut st = OptimizationState::new(src.labels(), 4);
    st = optimization_step(&st, &src, &cfg, 20, 2).unwrap();
    let before = st.clone();
    st = optimization_step(&st, &src, &cfg, 9, 2).unwrap();
    assert_eq!(st.discarded_batches, 1);
    assert_eq!(st.dataset, before.dataset);
    assert_eq!(st.current_model, before.current_model);
    assert!(!st.history.last().unwrap().accepted);
    assert_eq!(st.next_scene_id, 29);
}

#[test]
fn evaluation_matches_known_expectations() {
    let src = SyntheticSource {
        order_noise: 0.0,
        feature_noise: 0.0,
        variants: 1,
        samples_per_variant: 1,
        ..SyntheticSource::default()
    };
    // a single repeated sample is predicted perfectly
    let one: Vec<PreferenceSample> = vec![src.produce(0).unwrap().samples.remove(0); 4];
    let m = rpc_train(&one, &RpcConfig::default()).unwrap();
    let r = evaluate_model(&m, &one, TauVariant::Scaled).unwrap();
    assert_eq!(r.tau.median, 1.0);
    assert_eq!(r.tau_w.median, 1.0);
    // a fixed prediction against every permutation averages to zero
    let base = one[0].clone();
    let fixed = rpc_predict(&m, &base.features).unwrap().ranking;
    let mut perms = vec![fixed.clone()];
    for k in 0..4 {
        let mut next = Vec::new();
        for p in &perms {
            for i in k..4 {
                let mut q = p.clone();
                q.swap(k, i);
                next.push(q);
            }
        }
        perms = next;
    }
    assert_eq!(perms.len(), 24);
    let test: Vec<PreferenceSample> = perms
        .into_iter()
        .map(|p| PreferenceSample {
            sequence: p,
            ..base.clone()
        })
        .collect();
    let r = evaluate_model(&m, &test, TauVariant::Scaled).unwrap();
    assert!(r.tau.mean.abs() < 1e-12);
}
