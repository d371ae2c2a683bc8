//! Trial execution.
//!
//! Per step: plan from the current state and belief, draw the other
//! agents' actions from their hidden behavior boxes at the same state,
//! apply the joint action, then update the belief with the observed
//! actions and the pre-step state they were chosen in.

use std::sync::Arc;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rsbg_core::behavior_space::Hypothesis;
use rsbg_core::belief::LikelihoodConfig;
use rsbg_core::crossing::{
    expert_full_space, true_space_hypotheses, CrossingWorld, GapPolicy, TrueBehaviorDraw,
};
use rsbg_core::lanechange::{
    behavior_space_5d, partition_hypotheses, AccPolicy, DriverParam, LaneChangeWorld, ACCEL_MAX, ACCEL_MIN,
};
use rsbg_core::search::{plan, HypothesisSource};
use rsbg_core::{
    BehaviorSpace, BeliefState, Environment, HypotheticalPolicy, Outcome, Partition,
};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{DomainKind, ExperimentConfig, ResolvedPlanner};
use crate::error::BenchError;
use crate::metrics::{summarize, TrialRecord, TrialTiming, MetricsSummary};
use crate::seeds::{stream_rng, trial_seed_id, Stream};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "RSBG_WORKERS";

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub planners: Vec<ResolvedPlanner>,
    /// Ordered by planner, then trial.
    pub records: Vec<TrialRecord>,
    pub timings: Vec<TrialTiming>,
    pub summaries: Vec<MetricsSummary>,
}

/// Full per-step dump of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialTrace {
    pub planner: String,
    pub trial: usize,
    pub master_seed: u64,
    pub initial_state: Value,
    pub hidden_behavior: Value,
    pub steps: Vec<StepTrace>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTrace {
    pub step: u32,
    pub ego_action: usize,
    pub ego_action_label: String,
    pub q_values: Vec<Option<f64>>,
    pub visits: Vec<u64>,
    pub other_actions: Vec<f64>,
    pub reward: f64,
    pub belief: Vec<Vec<f64>>,
    pub state: Value,
}

struct EpisodeOutput {
    record: TrialRecord,
    timing: TrialTiming,
    trace: Option<TrialTrace>,
}

/// Worker count: `RSBG_WORKERS` when set, otherwise the machine's parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every planner on every trial. Work items run on a bounded pool and
/// are merged by (planner, trial) index, so results do not depend on the
/// worker count or completion order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, BenchError> {
    run_experiment_with_workers(cfg, worker_count())
}

pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput, BenchError> {
    cfg.validate()?;
    let planners = cfg.resolved_planners()?;
    let items: Vec<(usize, usize)> = (0..planners.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("worker pool: {e}")))?;
    let outputs: Vec<EpisodeOutput> = pool.install(|| {
        items
            .par_iter()
            .map(|&(p, t)| run_episode(cfg, &planners[p], t, false))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut records = Vec::with_capacity(outputs.len());
    let mut timings = Vec::with_capacity(outputs.len());
    for o in outputs {
        records.push(o.record);
        timings.push(o.timing);
    }
    let summaries = summarize(&records, cfg.metrics.belief_std_trials);
    Ok(ExperimentOutput {
        config: cfg.clone(),
        planners,
        records,
        timings,
        summaries,
    })
}

/// Re-runs one trial of one planner with a full trace.
pub fn replay_trial(cfg: &ExperimentConfig, planner_id: &str, trial: usize) -> Result<(TrialRecord, TrialTrace), BenchError> {
    cfg.validate()?;
    let planners = cfg.resolved_planners()?;
    let p = planners
        .iter()
        .find(|p| p.id == planner_id)
        .ok_or_else(|| {
            let ids: Vec<&str> = planners.iter().map(|p| p.id.as_str()).collect();
            BenchError::Config(format!("planner: unknown id `{planner_id}` (have {})", ids.join(", ")))
        })?;
    let out = run_episode(cfg, p, trial, true)?;
    Ok((out.record, out.trace.expect("trace requested")))
}

fn run_episode(cfg: &ExperimentConfig, planner: &ResolvedPlanner, trial: usize, trace: bool) -> Result<EpisodeOutput, BenchError> {
    match cfg.domain {
        DomainKind::Crossing => crossing_episode(cfg, planner, trial, trace),
        DomainKind::Lanechange => lanechange_episode(cfg, planner, trial, trace),
    }
}

fn scenario_hash(initial: &Value, hidden: &Value) -> String {
    let mut h = Sha256::new();
    h.update(initial.to_string().as_bytes());
    h.update(b"\n");
    h.update(hidden.to_string().as_bytes());
    hex::encode(&h.finalize()[..16])
}

fn crossing_snapshot(w: &CrossingWorld) -> Value {
    json!({
        "step": w.step_count(),
        "positions": w.positions(),
        "last_actions": w.last_actions(),
        "crossed": w.crossed(),
    })
}

fn crossing_episode(cfg: &ExperimentConfig, planner: &ResolvedPlanner, trial: usize, trace: bool) -> Result<EpisodeOutput, BenchError> {
    let opts = &cfg.crossing;
    let world = CrossingWorld::new(opts.params.clone())?;
    let n_others = world.n_others();
    let mut behavior_rng = stream_rng(cfg.master_seed, trial as u64, Stream::Behavior);
    let draws = TrueBehaviorDraw::sample(n_others, opts.true_space, &mut behavior_rng);
    let policy = Arc::new(GapPolicy);
    let hyps: Vec<Vec<Hypothesis<GapPolicy>>> = match planner.search.mode.hypothesis_source() {
        HypothesisSource::Partition | HypothesisSource::FullSpace => {
            let list = Partition::equal(&expert_full_space(), &planner.cells)?.hypotheses(policy);
            vec![list; n_others]
        }
        HypothesisSource::TrueSpace => true_space_hypotheses(&draws)?,
    };
    let hidden = serde_json::to_value(&draws).expect("serializable");
    let labels: Vec<String> = opts.params.ego_actions.iter().map(|a| format!("{a:+}")).collect();
    let tolerance = LikelihoodConfig::for_action_range(opts.params.min_velocity, opts.params.max_velocity).tolerance;
    let episode = Episode {
        cfg,
        planner,
        trial,
        trace,
        hidden,
        labels,
        default_tolerance: tolerance,
    };
    episode.run(world, &hyps, |w, rng| Ok(w.simulate_others(&draws, rng)?), crossing_snapshot)
}

fn lanechange_snapshot(w: &LaneChangeWorld) -> Value {
    json!({
        "step": w.step_count(),
        "ego": w.ego(),
        "others": w.others(),
    })
}

fn lanechange_episode(cfg: &ExperimentConfig, planner: &ResolvedPlanner, trial: usize, trace: bool) -> Result<EpisodeOutput, BenchError> {
    let params = &cfg.lanechange;
    let mut scenario_rng = stream_rng(cfg.master_seed, trial as u64, Stream::Scenario);
    let world = LaneChangeWorld::sample(params.clone(), &mut scenario_rng)?;
    let mut behavior_rng = stream_rng(cfg.master_seed, trial as u64, Stream::Behavior);
    let ranges = &params.driver_ranges;
    let boxes: Vec<BehaviorSpace> = (0..params.n_others)
        .map(|_| behavior_space_5d(ranges, params.delta_min, params.delta_max, &mut behavior_rng))
        .collect::<Result<_, _>>()?;
    let kind = planner.hypothesis_kind.expect("resolved lanechange planners carry a kind");
    let hyps: Vec<Vec<Hypothesis<AccPolicy>>> = match planner.search.mode.hypothesis_source() {
        HypothesisSource::Partition | HypothesisSource::FullSpace => {
            vec![partition_hypotheses(kind, ranges, &planner.cells)?; params.n_others]
        }
        HypothesisSource::TrueSpace => {
            let policy = Arc::new(AccPolicy::new(DriverParam::ALL.to_vec(), ranges.centers()));
            boxes
                .iter()
                .map(|b| vec![Hypothesis::new(0, b.clone(), Arc::clone(&policy))])
                .collect()
        }
    };
    let hidden = serde_json::to_value(&boxes).expect("serializable");
    let labels: Vec<String> = world.macros().iter().map(ToString::to_string).collect();
    let episode = Episode {
        cfg,
        planner,
        trial,
        trace,
        hidden,
        labels,
        default_tolerance: LikelihoodConfig::for_action_range(ACCEL_MIN, ACCEL_MAX).tolerance,
    };
    episode.run(world, &hyps, |w, rng| Ok(w.simulate_others(&boxes, rng)?), lanechange_snapshot)
}

struct Episode<'a> {
    cfg: &'a ExperimentConfig,
    planner: &'a ResolvedPlanner,
    trial: usize,
    trace: bool,
    hidden: Value,
    labels: Vec<String>,
    default_tolerance: f64,
}

impl Episode<'_> {
    fn run<E, P, F, S>(self, mut world: E, hyps: &[Vec<Hypothesis<P>>], mut simulate: F, snapshot: S) -> Result<EpisodeOutput, BenchError>
    where
        E: Environment,
        P: HypotheticalPolicy<E>,
        F: FnMut(&E, &mut ChaCha8Rng) -> Result<Vec<f64>, BenchError>,
        S: Fn(&E) -> Value,
    {
        let cfg = self.cfg;
        let trial = self.trial as u64;
        let mut others_rng = stream_rng(cfg.master_seed, trial, Stream::Others);
        let mut belief_rng = stream_rng(cfg.master_seed, trial, Stream::Belief);
        let mut planner_rng = stream_rng(cfg.master_seed, trial, Stream::Planner);
        let likelihood = LikelihoodConfig {
            m_samples: cfg.belief.m_samples,
            tolerance: cfg.belief.tolerance.unwrap_or(self.default_tolerance),
        };
        let mut belief = BeliefState::new(world.num_other_agents(), self.planner.k, None)?
            .with_fallback(cfg.belief.fallback);

        let initial_state = snapshot(&world);
        let hash = scenario_hash(&initial_state, &self.hidden);
        let mut steps = Vec::new();
        let mut ego_actions = Vec::new();
        let mut belief_std = Vec::new();
        let mut planning_secs = Vec::new();
        let mut n_steps = 0u32;

        while !world.is_terminal() {
            let started = Instant::now();
            let result = plan(&world, &belief, hyps, &self.planner.search, &mut planner_rng)?;
            planning_secs.push(started.elapsed().as_secs_f64());
            let others = simulate(&world, &mut others_rng)?;
            let before = world.clone();
            let reward = world.step(result.action, &others)?;
            n_steps += 1;
            if self.planner.k > 1 {
                belief = belief.update_all(&others, &before, hyps, likelihood, &mut belief_rng)?;
            }
            if belief_std.len() < cfg.metrics.belief_std_steps {
                belief_std.push(belief.normalized_std());
            }
            if cfg.metrics.trace || self.trace {
                ego_actions.push(result.action);
            }
            if self.trace {
                steps.push(StepTrace {
                    step: n_steps,
                    ego_action: result.action,
                    ego_action_label: self.labels[result.action].clone(),
                    q_values: result.q_values,
                    visits: result.visits,
                    other_actions: others,
                    reward,
                    belief: belief.posteriors().to_vec(),
                    state: snapshot(&world),
                });
            }
        }

        let outcome = world.outcome();
        let record = TrialRecord {
            planner: self.planner.id.clone(),
            trial: self.trial,
            seed: trial_seed_id(cfg.master_seed, trial),
            outcome,
            steps: n_steps,
            steps_to_goal: (outcome == Outcome::Success).then_some(n_steps),
            belief_std,
            scenario_hash: hash,
            ego_actions,
        };
        let timing = TrialTiming {
            planner: self.planner.id.clone(),
            trial: self.trial,
            planning_secs,
        };
        let trace = self.trace.then(|| TrialTrace {
            planner: self.planner.id.clone(),
            trial: self.trial,
            master_seed: cfg.master_seed,
            initial_state,
            hidden_behavior: self.hidden,
            steps,
            outcome,
        });
        Ok(EpisodeOutput { record, timing, trace })
    }
}
