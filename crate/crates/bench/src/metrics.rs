//! Per-trial records and their aggregation.

use rsbg_core::Outcome;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub planner: String,
    pub trial: usize,
    /// Printable id of the trial's seed material.
    pub seed: String,
    pub outcome: Outcome,
    pub steps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_to_goal: Option<u32>,
    /// Normalized belief std after each of the first configured steps.
    pub belief_std: Vec<f64>,
    /// Hash of the initial world and the hidden behavior boxes; equal across
    /// planners for the same trial.
    pub scenario_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ego_actions: Vec<usize>,
}

/// Planning wall time of one trial, kept out of the deterministic results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub planner: String,
    pub trial: usize,
    pub planning_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub planner: String,
    pub trials: usize,
    pub success_pct: f64,
    pub collision_pct: f64,
    pub timeout_pct: f64,
    /// Mean steps over successful trials; absent without successes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_steps_to_goal: Option<f64>,
    /// Mean normalized belief std per step over the leading trials; `None`
    /// where no such trial lasted that long.
    pub belief_std_curve: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub planner: String,
    pub steps: usize,
    pub mean_secs: f64,
    pub p50_secs: f64,
    pub p95_secs: f64,
    pub max_secs: f64,
}

fn planners_in_order<'a, I: Iterator<Item = &'a str>>(names: I) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for n in names {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

/// One summary per planner, in order of first appearance. The belief-std
/// curve averages the `curve_trials` lowest trial indices.
pub fn summarize(records: &[TrialRecord], curve_trials: usize) -> Vec<MetricsSummary> {
    planners_in_order(records.iter().map(|r| r.planner.as_str()))
        .into_iter()
        .map(|name| {
            let mut rs: Vec<&TrialRecord> = records.iter().filter(|r| r.planner == name).collect();
            rs.sort_by_key(|r| r.trial);
            let n = rs.len();
            let pct = |o: Outcome| 100.0 * rs.iter().filter(|r| r.outcome == o).count() as f64 / n as f64;
            let goal_steps: Vec<f64> = rs.iter().filter_map(|r| r.steps_to_goal).map(f64::from).collect();
            let mean_steps_to_goal =
                (!goal_steps.is_empty()).then(|| goal_steps.iter().sum::<f64>() / goal_steps.len() as f64);
            let leading = &rs[..n.min(curve_trials)];
            let depth = leading.iter().map(|r| r.belief_std.len()).max().unwrap_or(0);
            let belief_std_curve = (0..depth)
                .map(|t| {
                    let xs: Vec<f64> = leading.iter().filter_map(|r| r.belief_std.get(t).copied()).collect();
                    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
                })
                .collect();
            MetricsSummary {
                planner: name.to_string(),
                trials: n,
                success_pct: pct(Outcome::Success),
                collision_pct: pct(Outcome::Collision),
                timeout_pct: pct(Outcome::Timeout),
                mean_steps_to_goal,
                belief_std_curve,
            }
        })
        .collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    // Nearest-rank percentile.
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn summarize_timing(timings: &[TrialTiming]) -> Vec<TimingSummary> {
    planners_in_order(timings.iter().map(|t| t.planner.as_str()))
        .into_iter()
        .map(|name| {
            let mut xs: Vec<f64> = timings
                .iter()
                .filter(|t| t.planner == name)
                .flat_map(|t| t.planning_secs.iter().copied())
                .collect();
            xs.sort_by(f64::total_cmp);
            let steps = xs.len();
            let (mean, p50, p95, max) = if steps == 0 {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                (
                    xs.iter().sum::<f64>() / steps as f64,
                    percentile(&xs, 0.5),
                    percentile(&xs, 0.95),
                    xs[steps - 1],
                )
            };
            TimingSummary {
                planner: name.to_string(),
                steps,
                mean_secs: mean,
                p50_secs: p50,
                p95_secs: p95,
                max_secs: max,
            }
        })
        .collect()
}
