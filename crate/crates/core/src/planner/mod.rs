//! Search-tree construction and depth-first minimum-cost sequence planning
//! with subtree reuse, incumbent pruning and flag pruning.

mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_extraction, SimConfig, SimFlags};
use crate::error::{Error, Result};
use crate::geometry::WeightVector;
use crate::scene::Scene;

pub use report::PlanReport;

pub const MAX_OBJECTS: usize = 8;
/// Memo pose quantum: positions in workspace units, angles in radians.
pub const MEMO_QUANTUM: f64 = 1e-3;
/// Node cost above which a node counts as significant movement.
pub const SIGNIFICANT_COST: f64 = 2.0;

/// Worst-case node count of the search tree over `n` objects.
pub fn node_count_formula(n: usize) -> Result<u64> {
    Ok(level_sizes(n)?.iter().sum())
}

/// Node count per level: `n! / (n - i)!` for `i` in `0..n`.
pub fn level_sizes(n: usize) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::EmptyScene);
    }
    let mut sizes = Vec::with_capacity(n);
    let mut s: u64 = 1;
    for i in 0..n {
        sizes.push(s);
        s = s
            .checked_mul((n - i) as u64)
            .ok_or_else(|| Error::InvalidConfig(format!("tree over {n} objects is too large")))?;
    }
    Ok(sizes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneCause {
    KnownSubtree,
    CostExceedsBest,
    ActiveMoved,
    OutOfWorkspace,
    PlanFailure,
}

impl PruneCause {
    pub const ALL: [PruneCause; 5] = [
        PruneCause::KnownSubtree,
        PruneCause::CostExceedsBest,
        PruneCause::ActiveMoved,
        PruneCause::OutOfWorkspace,
        PruneCause::PlanFailure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PruneCause::KnownSubtree => "known_subtree",
            PruneCause::CostExceedsBest => "cost_exceeds_best",
            PruneCause::ActiveMoved => "active_moved",
            PruneCause::OutOfWorkspace => "out_of_workspace",
            PruneCause::PlanFailure => "plan_failure",
        }
    }

    fn from_flags(f: &SimFlags) -> Option<Self> {
        if f.plan_failure {
            Some(PruneCause::PlanFailure)
        } else if f.active_moved {
            Some(PruneCause::ActiveMoved)
        } else if !f.out_of_workspace.is_empty() {
            Some(PruneCause::OutOfWorkspace)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub level: usize,
    /// Remaining objects, ascending.
    pub objects: Vec<u32>,
    /// Object removed from the parent to reach this node; `None` at the root.
    pub active: Option<u32>,
    /// Cost of that removal; leaves also include the final single-object removal.
    pub cost: Option<f64>,
    pub prune_cause: Option<PruneCause>,
    pub children: Vec<usize>,
    /// Node count of the subtree rooted here, this node included.
    pub subtree_size: usize,
}

/// Search tree in depth-first preorder; every subtree is a contiguous range.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        let depth = self.nodes.iter().map(|n| n.level).max().unwrap_or(0);
        let mut sizes = vec![0; depth + 1];
        for n in &self.nodes {
            sizes[n.level] += 1;
        }
        sizes
    }

    pub fn leaves(&self) -> impl Iterator<Item = &SearchNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    fn mark(&mut self, node: usize, from_self: bool, cause: PruneCause) -> usize {
        let start = if from_self { node } else { node + 1 };
        let end = node + self.nodes[node].subtree_size;
        for n in &mut self.nodes[start..end] {
            n.prune_cause = Some(cause);
        }
        end - start
    }
}

/// All removal orders over `objects` as a tree whose leaves hold one object.
pub fn build_search_tree(objects: &[u32]) -> Result<SearchTree> {
    if objects.is_empty() {
        return Err(Error::EmptyScene);
    }
    if objects.len() > MAX_OBJECTS {
        return Err(Error::TooManyObjects(objects.len()));
    }
    let mut ids = objects.to_vec();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateObject(w[0]));
    }
    let mut nodes = Vec::with_capacity(node_count_formula(ids.len())? as usize);
    fn grow(nodes: &mut Vec<SearchNode>, objects: Vec<u32>, active: Option<u32>, level: usize) -> usize {
        let idx = nodes.len();
        nodes.push(SearchNode {
            level,
            objects: objects.clone(),
            active,
            cost: None,
            prune_cause: None,
            children: Vec::new(),
            subtree_size: 1,
        });
        if objects.len() > 1 {
            for &a in &objects {
                let rest: Vec<u32> = objects.iter().copied().filter(|&o| o != a).collect();
                let c = grow(nodes, rest, Some(a), level + 1);
                nodes[idx].children.push(c);
            }
        }
        nodes[idx].subtree_size = nodes.len() - idx;
        idx
    }
    grow(&mut nodes, ids, None, 0);
    Ok(SearchTree { nodes })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneStats {
    pub total_nodes: usize,
    pub simulated_nodes: usize,
    pub known_subtree: usize,
    pub cost_exceeds_best: usize,
    pub active_moved: usize,
    pub out_of_workspace: usize,
    pub plan_failure: usize,
    /// Simulated nodes whose cost exceeds the significance threshold.
    pub significant_movement_nodes: usize,
    /// Calls into the simulator, including final single-object removals.
    pub simulation_runs: usize,
}

impl PruneStats {
    pub fn pruned_total(&self) -> usize {
        self.known_subtree + self.cost_exceeds_best + self.active_moved + self.out_of_workspace + self.plan_failure
    }

    pub fn pruned(&self, cause: PruneCause) -> usize {
        match cause {
            PruneCause::KnownSubtree => self.known_subtree,
            PruneCause::CostExceedsBest => self.cost_exceeds_best,
            PruneCause::ActiveMoved => self.active_moved,
            PruneCause::OutOfWorkspace => self.out_of_workspace,
            PruneCause::PlanFailure => self.plan_failure,
        }
    }

    fn add(&mut self, cause: PruneCause, n: usize) {
        match cause {
            PruneCause::KnownSubtree => self.known_subtree += n,
            PruneCause::CostExceedsBest => self.cost_exceeds_best += n,
            PruneCause::ActiveMoved => self.active_moved += n,
            PruneCause::OutOfWorkspace => self.out_of_workspace += n,
            PruneCause::PlanFailure => self.plan_failure += n,
        }
    }

    pub fn pruned_fraction(&self) -> f64 {
        if self.total_nodes == 0 {
            0.0
        } else {
            self.pruned_total() as f64 / self.total_nodes as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSequence {
    pub sequence: Vec<u32>,
    pub cost: f64,
    pub node_costs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    /// Completed sequences, ascending by cost, ties in lexicographic order.
    pub ranked: Vec<RankedSequence>,
    pub stats: PruneStats,
    pub best: RankedSequence,
    pub tree: SearchTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub weights: WeightVector,
    pub sim: SimConfig,
    /// Reuse results of subtrees with matching remaining objects and poses.
    pub reuse_subtrees: bool,
    /// Abandon branches that cannot beat the incumbent.
    pub prune_by_cost: bool,
    /// Skip the subtree below a node whose simulation raised a flag.
    pub prune_by_flags: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            weights: WeightVector::default(),
            sim: SimConfig::default(),
            reuse_subtrees: true,
            prune_by_cost: true,
            prune_by_flags: true,
        }
    }
}

impl PlanConfig {
    pub fn with_weights(weights: WeightVector) -> Self {
        Self {
            weights,
            ..Self::default()
        }
    }

    /// Every node simulated, nothing pruned.
    pub fn exhaustive(weights: WeightVector) -> Self {
        Self {
            weights,
            reuse_subtrees: false,
            prune_by_cost: false,
            prune_by_flags: false,
            ..Self::default()
        }
    }
}

type MemoKey = Vec<(u32, [i64; 6])>;

fn memo_key(scene: &Scene) -> MemoKey {
    let mut key: MemoKey = scene
        .objects
        .iter()
        .map(|o| {
            let a = o.pose.to_array();
            (o.id, a.map(|v| (v / MEMO_QUANTUM).round() as i64))
        })
        .collect();
    key.sort_unstable_by_key(|k| k.0);
    key
}

type Suffix = Vec<(u32, f64)>;

#[derive(Debug, Clone)]
enum Memo {
    /// Fully explored: every completed suffix, in traversal order.
    Exact(Vec<Suffix>),
    /// Partially explored: no suffix from here costs less than the bound.
    LowerBound(f64),
}

struct Explored {
    suffixes: Vec<Suffix>,
    complete: bool,
}

fn fold_costs(costs: impl IntoIterator<Item = f64>) -> f64 {
    costs.into_iter().fold(0.0, |a, c| a + c)
}

/// Cheapest possible total after `k` more removals, each costing at least 1.
fn lower_bound(acc: f64, k: usize) -> f64 {
    (0..k).fold(acc, |a, _| a + 1.0)
}

// guards reuse of partially explored subtrees against rounding in the bound
const BOUND_SLACK: f64 = 1e-9;

struct Search<'a> {
    cfg: &'a PlanConfig,
    tree: SearchTree,
    stats: PruneStats,
    memo: HashMap<MemoKey, Memo>,
    best: Option<f64>,
    ranked: Vec<RankedSequence>,
    prefix: Vec<(u32, f64)>,
}

impl Search<'_> {
    fn prune(&mut self, node: usize, from_self: bool, cause: PruneCause) {
        let n = self.tree.mark(node, from_self, cause);
        self.stats.add(cause, n);
    }

    fn complete(&mut self, suffix: &[(u32, f64)]) {
        let (sequence, node_costs): (Vec<u32>, Vec<f64>) =
            self.prefix.iter().chain(suffix).copied().unzip();
        let cost = fold_costs(node_costs.iter().copied());
        if !cost.is_finite() {
            return;
        }
        if self.best.is_none_or(|b| cost < b) {
            self.best = Some(cost);
        }
        self.ranked.push(RankedSequence {
            sequence,
            cost,
            node_costs,
        });
    }

    fn cost_of(&mut self, scene: &Scene, active: u32) -> Result<(f64, Option<PruneCause>, Scene)> {
        self.stats.simulation_runs += 1;
        let out = simulate_extraction(scene, active, &self.cfg.sim)?;
        let cause = PruneCause::from_flags(&out.flags);
        let cost = if cause.is_some() {
            f64::INFINITY
        } else {
            out.node_cost(scene, &self.cfg.weights)?
        };
        Ok((cost, cause, out.final_scene))
    }

    /// Explores `node`, already counted as simulated, whose entry state is `scene`.
    fn visit(&mut self, node: usize, scene: &Scene, acc: f64) -> Result<Explored> {
        let remaining = self.tree.nodes[node].objects.clone();
        if remaining.len() == 1 {
            let id = remaining[0];
            let (cost, cause, _) = self.cost_of(scene, id)?;
            let parent_cost = self.tree.nodes[node].cost;
            // a leaf carries its creating removal and the final one
            self.tree.nodes[node].cost = Some(parent_cost.map_or(cost, |c| c + cost));
            if let Some(cause) = cause.filter(|_| self.cfg.prune_by_flags) {
                self.stats.simulated_nodes -= 1;
                self.prune(node, true, cause);
                return Ok(Explored {
                    suffixes: Vec::new(),
                    complete: true,
                });
            }
            let suffix = vec![(id, cost)];
            self.complete(&suffix);
            return Ok(Explored {
                suffixes: vec![suffix],
                complete: true,
            });
        }

        let k = remaining.len();
        let mut suffixes = Vec::new();
        let mut complete = true;
        let children = self.tree.nodes[node].children.clone();
        for c in children {
            let alpha = self.tree.nodes[c].active.expect("non-root node has an active object");
            if self.cfg.prune_by_cost && self.best.is_some_and(|b| lower_bound(acc, k) >= b) {
                self.prune(c, true, PruneCause::CostExceedsBest);
                complete = false;
                continue;
            }
            let (v, cause, next) = self.cost_of(scene, alpha)?;
            self.tree.nodes[c].cost = Some(v);
            if let Some(cause) = cause.filter(|_| self.cfg.prune_by_flags) {
                self.prune(c, true, cause);
                continue;
            }
            self.stats.simulated_nodes += 1;
            if v > SIGNIFICANT_COST {
                self.stats.significant_movement_nodes += 1;
            }
            let acc2 = acc + v;
            if self.cfg.prune_by_cost && self.best.is_some_and(|b| lower_bound(acc2, k - 1) >= b) {
                self.prune(c, false, PruneCause::CostExceedsBest);
                complete = false;
                continue;
            }

            let key = self.cfg.reuse_subtrees.then(|| memo_key(&next));
            if let Some(entry) = key.as_ref().and_then(|k| self.memo.get(k)).cloned() {
                match entry {
                    Memo::Exact(found) => {
                        self.prune(c, false, PruneCause::KnownSubtree);
                        self.prefix.push((alpha, v));
                        for s in &found {
                            self.complete(s);
                        }
                        self.prefix.pop();
                        suffixes.extend(found.into_iter().map(|s| {
                            let mut full = vec![(alpha, v)];
                            full.extend(s);
                            full
                        }));
                        continue;
                    }
                    Memo::LowerBound(bound) => {
                        if self.best.is_some_and(|b| b - acc2 <= bound - BOUND_SLACK) {
                            self.prune(c, false, PruneCause::KnownSubtree);
                            complete = false;
                            continue;
                        }
                    }
                }
            }

            self.prefix.push((alpha, v));
            let sub = self.visit(c, &next, acc2)?;
            self.prefix.pop();
            if let Some(key) = key {
                let entry = if sub.complete {
                    Memo::Exact(sub.suffixes.clone())
                } else {
                    let budget = self.best.map_or(f64::INFINITY, |b| b - acc2);
                    let cheapest = sub
                        .suffixes
                        .iter()
                        .map(|s| fold_costs(s.iter().map(|x| x.1)))
                        .fold(f64::INFINITY, f64::min);
                    Memo::LowerBound(budget.min(cheapest))
                };
                self.memo.insert(key, entry);
            }
            complete &= sub.complete;
            suffixes.extend(sub.suffixes.into_iter().map(|s| {
                let mut full = vec![(alpha, v)];
                full.extend(s);
                full
            }));
        }
        Ok(Explored { suffixes, complete })
    }
}

/// Depth-first search for the removal order with the lowest summed node cost.
pub fn plan_min_cost_sequence(scene: &Scene, cfg: &PlanConfig) -> Result<PlanResult> {
    let ids = scene.sorted_ids();
    let tree = build_search_tree(&ids)?;
    let mut search = Search {
        cfg,
        stats: PruneStats {
            total_nodes: tree.len(),
            simulated_nodes: 1,
            ..PruneStats::default()
        },
        tree,
        memo: HashMap::new(),
        best: None,
        ranked: Vec::new(),
        prefix: Vec::new(),
    };
    search.visit(0, scene, 0.0)?;
    let Search {
        mut ranked,
        stats,
        tree,
        ..
    } = search;
    debug_assert_eq!(stats.simulated_nodes + stats.pruned_total(), stats.total_nodes);
    if ranked.is_empty() {
        return Err(Error::NoViableSequence(Box::new(stats)));
    }
    // stable: equal costs keep lexicographic traversal order
    ranked.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let best = ranked[0].clone();
    Ok(PlanResult {
        ranked,
        stats,
        best,
        tree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_shapes() {
        let t = build_search_tree(&[4, 1, 3, 2]).unwrap();
        assert_eq!(t.level_sizes(), vec![1, 4, 12, 24]);
        assert_eq!(t.len(), 41);
        assert!(t.leaves().all(|n| n.objects.len() == 1));
        assert_eq!(t.root().objects, vec![1, 2, 3, 4]);
        assert_eq!(build_search_tree(&[1, 2, 3]).unwrap().level_sizes(), vec![1, 3, 6]);
        let one = build_search_tree(&[7]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one.root().children.is_empty());
        assert!(matches!(build_search_tree(&[]), Err(Error::EmptyScene)));
        assert!(build_search_tree(&[1, 1]).is_err());
    }

    #[test]
    fn subtrees_are_contiguous() {
        let t = build_search_tree(&[1, 2, 3, 4]).unwrap();
        for (i, n) in t.nodes.iter().enumerate() {
            let m = n.objects.len();
            assert_eq!(n.subtree_size as u64, node_count_formula(m).unwrap());
            for &c in &n.children {
                assert!(c > i && c < i + n.subtree_size);
                assert_eq!(t.nodes[c].level, n.level + 1);
            }
            // each child differs from its parent by exactly its active object
            for &c in &n.children {
                let child = &t.nodes[c];
                let a = child.active.unwrap();
                let mut back = child.objects.clone();
                back.push(a);
                back.sort();
                assert_eq!(back, n.objects);
            }
        }
    }

    #[test]
    fn formula_matches_direct_sum() {
        fn fact(n: u64) -> u64 {
            (1..=n).product()
        }
        for n in 1..=8u64 {
            let direct: u64 = (0..n).map(|i| fact(n) / fact(n - i)).sum();
            assert_eq!(node_count_formula(n as usize).unwrap(), direct);
        }
        assert_eq!(node_count_formula(4).unwrap(), 41);
        assert_eq!(node_count_formula(3).unwrap(), 10);
        assert_eq!(node_count_formula(1).unwrap(), 1);
        assert!(node_count_formula(0).is_err());
    }

    #[test]
    fn bound_folds_like_paths() {
        assert_eq!(lower_bound(0.0, 3), 3.0);
        assert_eq!(lower_bound(1.5, 0), 1.5);
        assert_eq!(fold_costs([1.0, 2.0, 0.5]), 3.5);
    }
}
