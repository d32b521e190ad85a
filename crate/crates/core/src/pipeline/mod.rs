//! Self-supervised strategy optimization: scenes are generated and sampled by
//! mental simulation, the ranker is retrained on the growing dataset, and a
//! batch is dropped whenever it makes the test score worse.

mod io;
mod source;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{
    kendall_tau, preference_weights, rpc_predict, rpc_train, weighted_kendall_tau, PrefWeights, PreferenceSample,
    RpcConfig, RpcModel, TauVariant,
};

pub use io::{read_history_csv, write_history_csv, Manifest, DATASET_FILE, HISTORY_FILE, MANIFEST_FILE, MODEL_FILE};
pub use source::{collect_samples, mix_seed, CollectConfig, SampleSource, SceneBatch, SimulationSource, SyntheticSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    /// Ordered by (scene_id, variant, sample_idx).
    pub samples: Vec<PreferenceSample>,
    pub split: BTreeMap<u64, Split>,
    pub label_multiset: Vec<String>,
}

impl Dataset {
    pub fn new(label_multiset: Vec<String>) -> Self {
        let mut l = label_multiset;
        l.sort();
        Self {
            samples: Vec::new(),
            split: BTreeMap::new(),
            label_multiset: l,
        }
    }

    pub fn scene_count(&self) -> usize {
        self.split.len()
    }

    pub fn count(&self, which: Split) -> usize {
        self.split.values().filter(|s| **s == which).count()
    }

    /// Two train scenes for every test scene, assigned in arrival order.
    fn next_split(&self) -> Split {
        if 2 * self.count(Split::Test) < self.count(Split::Train) {
            Split::Test
        } else {
            Split::Train
        }
    }

    pub fn add_batch(&mut self, batch: SceneBatch) -> Result<()> {
        if self.split.contains_key(&batch.scene_id) {
            return Err(Error::InvalidConfig(format!("scene {} already in the dataset", batch.scene_id)));
        }
        for s in &batch.samples {
            let mut l = s.sequence.clone();
            l.sort();
            if l != self.label_multiset {
                return Err(Error::LabelMismatch(format!("{:?} vs {:?}", s.sequence, self.label_multiset)));
            }
        }
        if batch.samples.is_empty() {
            return Ok(());
        }
        let split = self.next_split();
        self.split.insert(batch.scene_id, split);
        self.samples.extend(batch.samples);
        self.samples
            .sort_by_key(|s| (s.scene_id, s.variant, s.sample_idx));
        Ok(())
    }

    pub fn samples_in(&self, which: Split) -> Vec<PreferenceSample> {
        self.samples
            .iter()
            .filter(|s| self.split.get(&s.scene_id) == Some(&which))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self {
            median: q(0.5),
            q1: q(0.25),
            q3: q(0.75),
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub tau: Summary,
    pub tau_w: Summary,
}

/// Scores predictions on `test` against each sample's sequence; τ_w uses the
/// preference weights of the sample's own scene.
pub fn evaluate_model(model: &RpcModel, test: &[PreferenceSample], variant: TauVariant) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test split"));
    }
    let mut labels = test[0].sequence.clone();
    labels.sort();
    if labels != model.labels {
        return Err(Error::LabelMismatch(format!("model {:?} vs data {:?}", model.labels, labels)));
    }
    let mut by_scene: BTreeMap<u64, Vec<PreferenceSample>> = BTreeMap::new();
    for s in test {
        by_scene.entry(s.scene_id).or_default().push(s.clone());
    }
    let weights: BTreeMap<u64, PrefWeights> = by_scene
        .iter()
        .map(|(k, g)| preference_weights(g).map(|w| (*k, w)))
        .collect::<Result<_>>()?;
    let mut tau = Vec::with_capacity(test.len());
    let mut tau_w = Vec::with_capacity(test.len());
    for s in test {
        let p = rpc_predict(model, &s.features)?;
        tau.push(kendall_tau(&p.ranking, &s.sequence)?);
        tau_w.push(weighted_kendall_tau(&p.ranking, &s.sequence, &weights[&s.scene_id], variant)?);
    }
    Ok(EvalReport {
        samples: test.len(),
        tau: Summary::of(&tau).expect("non-empty"),
        tau_w: Summary::of(&tau_w).expect("non-empty"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub scenes: usize,
    pub tau_w_median: f64,
    pub accepted: bool,
}

/// Sample counts per step; appended samples minus discarded ones always match the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub iteration: usize,
    pub offered: usize,
    pub kept: usize,
    pub failed_scenes: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub rpc: RpcConfig,
    pub tau: TauVariant,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            rpc: RpcConfig::default(),
            tau: TauVariant::Scaled,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationState {
    pub dataset: Dataset,
    pub current_model: Option<RpcModel>,
    pub history: Vec<HistoryEntry>,
    pub audit: Vec<AuditEntry>,
    pub discarded_batches: usize,
    pub failed_scenes: usize,
    pub rng_seed: u64,
    /// First scene id not yet consumed.
    pub next_scene_id: u64,
}

impl OptimizationState {
    pub fn new(labels: Vec<String>, rng_seed: u64) -> Self {
        Self {
            dataset: Dataset::new(labels),
            current_model: None,
            history: Vec::new(),
            audit: Vec::new(),
            discarded_batches: 0,
            failed_scenes: 0,
            rng_seed,
            next_scene_id: 0,
        }
    }

    /// Median test τ_w of the last accepted step.
    pub fn accepted_tau_w(&self) -> Option<f64> {
        self.history.iter().rev().find(|h| h.accepted).map(|h| h.tau_w_median)
    }

    pub fn accepted_history(&self) -> Vec<&HistoryEntry> {
        self.history.iter().filter(|h| h.accepted).collect()
    }
}

/// Trainer half of a step: tentatively extend, retrain, keep only if the
/// median test τ_w did not drop.
pub fn apply_batches(
    state: &OptimizationState,
    batches: Vec<(u64, Result<SceneBatch>)>,
    cfg: &StepConfig,
) -> Result<OptimizationState> {
    let mut next = state.clone();
    let iteration = state.history.len();
    let mut tentative = state.dataset.clone();
    let mut offered = 0;
    let mut failed = 0;
    for (id, b) in batches {
        next.next_scene_id = next.next_scene_id.max(id + 1);
        match b {
            Ok(b) => {
                offered += b.samples.len();
                tentative.add_batch(b)?;
            }
            Err(e) => {
                log::warn!("scene {id} produced no samples: {e}");
                failed += 1;
            }
        }
    }
    next.failed_scenes += failed;
    let train = tentative.samples_in(Split::Train);
    let test = tentative.samples_in(Split::Test);
    let total_before = state.dataset.samples.len();
    let audit = |kept: usize| AuditEntry {
        iteration,
        offered,
        kept,
        failed_scenes: failed,
        total: total_before + kept,
    };
    if offered == 0 {
        next.audit.push(audit(0));
        return Ok(next);
    }
    if train.len() < 2 || test.is_empty() {
        // not enough scenes to train and test yet: keep collecting
        next.dataset = tentative;
        next.audit.push(audit(offered));
        return Ok(next);
    }
    let mut model = rpc_train(&train, &cfg.rpc)?;
    let report = evaluate_model(&model, &test, cfg.tau)?;
    let median = report.tau_w.median;
    let accepted = state.accepted_tau_w().is_none_or(|prev| median >= prev);
    log::info!(
        "step {iteration}: {} scenes, median tau_w {median:.4} ({})",
        tentative.scene_count(),
        if accepted { "kept" } else { "discarded" }
    );
    next.history.push(HistoryEntry {
        iteration,
        scenes: tentative.scene_count(),
        tau_w_median: median,
        accepted,
    });
    if accepted {
        model.meta.test_tau_w = Some(median);
        next.current_model = Some(model);
        next.dataset = tentative;
        next.audit.push(audit(offered));
    } else {
        next.discarded_batches += 1;
        next.audit.push(audit(0));
    }
    Ok(next)
}

/// Produces batches for `ids` on `workers` threads, returned in id order.
pub fn produce_batches(source: &dyn SampleSource, ids: &[u64], workers: usize) -> Vec<(u64, Result<SceneBatch>)> {
    let workers = workers.max(1).min(ids.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&id) = ids.get(k) else { break };
                if tx.send((id, source.produce(id))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut out: Vec<(u64, Result<SceneBatch>)> = rx.into_iter().collect();
    out.sort_by_key(|x| x.0);
    out
}

/// Generates `new_scene_count` scenes and applies them as one batch.
pub fn optimization_step(
    state: &OptimizationState,
    source: &dyn SampleSource,
    cfg: &StepConfig,
    new_scene_count: usize,
    workers: usize,
) -> Result<OptimizationState> {
    let ids: Vec<u64> = (state.next_scene_id..state.next_scene_id + new_scene_count as u64).collect();
    apply_batches(state, produce_batches(source, &ids, workers), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub initial_scenes: usize,
    pub scenes_per_step: usize,
    /// Total scene ids to consume, initial ones included.
    pub scene_budget: usize,
    pub workers: usize,
    pub seed: u64,
    pub step: StepConfig,
    /// Directory for the model snapshot, dataset, manifest and history.
    pub out_dir: Option<PathBuf>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            initial_scenes: 3,
            scenes_per_step: 1,
            scene_budget: 10,
            workers: 1,
            seed: 0,
            step: StepConfig::default(),
            out_dir: None,
        }
    }
}

/// Predicate consulted between steps.
pub type ContinueHook = Box<dyn Fn(&OptimizationState) -> bool + Send + Sync>;

/// External stop conditions for the loop.
#[derive(Default)]
pub struct LoopControl {
    pub interrupt: Arc<AtomicBool>,
    pub deadline: Option<Instant>,
    /// Checked before every step; returning false ends the loop.
    pub may_continue: Option<ContinueHook>,
}

impl LoopControl {
    fn stop(&self, state: &OptimizationState) -> bool {
        self.interrupt.load(Ordering::SeqCst)
            || self.deadline.is_some_and(|d| Instant::now() >= d)
            || self.may_continue.as_ref().is_some_and(|f| !f(state))
    }
}

/// Producers fill a queue with scene batches in any order while the trainer
/// consumes them in scene order, one step at a time.
pub fn run_optimization_loop(
    source: &dyn SampleSource,
    cfg: &LoopConfig,
    control: &LoopControl,
) -> Result<OptimizationState> {
    let mut state = OptimizationState::new(source.labels(), cfg.seed);
    if cfg.scene_budget == 0 {
        return Ok(state);
    }
    if cfg.initial_scenes < 2 || cfg.scenes_per_step == 0 {
        return Err(Error::InvalidConfig(
            "need at least 2 initial scenes and 1 scene per step".into(),
        ));
    }
    let budget = cfg.scene_budget.max(cfg.initial_scenes) as u64;
    let workers = cfg.workers.max(1);
    let next = AtomicUsize::new(0);
    let done = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(u64, Result<SceneBatch>)>();

    std::thread::scope(|s| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, done) = (&next, &done);
            s.spawn(move || {
                while !done.load(Ordering::SeqCst) {
                    let id = next.fetch_add(1, Ordering::SeqCst) as u64;
                    if id >= budget || tx.send((id, source.produce(id))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let result = (|| {
            let mut pending: BTreeMap<u64, Result<SceneBatch>> = BTreeMap::new();
            let mut take = cfg.initial_scenes as u64;
            let mut cursor = 0u64;
            while cursor < budget {
                if state.history.len() + state.audit.len() > 0 && control.stop(&state) {
                    break;
                }
                let end = (cursor + take).min(budget);
                while (cursor..end).any(|id| !pending.contains_key(&id)) {
                    match rx.recv() {
                        Ok((id, b)) => {
                            pending.insert(id, b);
                        }
                        Err(_) => return Err(Error::InvalidConfig("sample producers stopped early".into())),
                    }
                }
                let batch: Vec<(u64, Result<SceneBatch>)> =
                    (cursor..end).map(|id| (id, pending.remove(&id).expect("received"))).collect();
                state = apply_batches(&state, batch, &cfg.step)?;
                if let Some(dir) = &cfg.out_dir {
                    io::write_outputs(dir, &state)?;
                }
                cursor = end;
                take = cfg.scenes_per_step as u64;
            }
            Ok(())
        })();
        done.store(true, Ordering::SeqCst);
        // unblock producers waiting on a send by draining the queue
        drop(rx);
        result
    })?;
    Ok(state)
}

/// Scene ids in both splits must never overlap; exposed for tests and audits.
pub fn split_is_disjoint(d: &Dataset) -> bool {
    let train: BTreeSet<u64> = d.split.iter().filter(|x| *x.1 == Split::Train).map(|x| *x.0).collect();
    d.split.iter().filter(|x| *x.1 == Split::Test).all(|x| !train.contains(x.0))
}
