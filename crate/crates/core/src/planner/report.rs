use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PlanResult, PruneCause, PruneStats, RankedSequence, SIGNIFICANT_COST};
use crate::geometry::WeightVector;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub version: u32,
    pub objects: Vec<u32>,
    pub weights: WeightVector,
    pub best: RankedSequence,
    pub ranked: Vec<RankedSequence>,
    pub stats: PruneStats,
    /// Percent of all tree nodes per prune cause, plus `total`.
    pub pruned_percent: BTreeMap<String, f64>,
    pub significant_cost_threshold: f64,
    /// Share of simulated nodes whose cost exceeds the threshold.
    pub significant_movement_fraction: f64,
    pub first_ranked_cost_per_node: f64,
    pub second_ranked_cost_per_node: Option<f64>,
}

impl PlanReport {
    pub fn new(result: &PlanResult, weights: WeightVector) -> Self {
        let s = &result.stats;
        let pct = |n: usize| 100.0 * n as f64 / s.total_nodes.max(1) as f64;
        let mut pruned_percent: BTreeMap<String, f64> =
            PruneCause::ALL.iter().map(|c| (c.name().to_string(), pct(s.pruned(*c)))).collect();
        pruned_percent.insert("total".into(), pct(s.pruned_total()));
        let n = result.best.sequence.len() as f64;
        Self {
            version: REPORT_VERSION,
            objects: result.tree.root().objects.clone(),
            weights,
            best: result.best.clone(),
            ranked: result.ranked.clone(),
            stats: s.clone(),
            pruned_percent,
            significant_cost_threshold: SIGNIFICANT_COST,
            significant_movement_fraction: s.significant_movement_nodes as f64 / s.simulated_nodes.max(1) as f64,
            first_ranked_cost_per_node: result.best.cost / n,
            second_ranked_cost_per_node: result.ranked.get(1).map(|r| r.cost / n),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
