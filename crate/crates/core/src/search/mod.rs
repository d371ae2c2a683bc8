//! Monte-Carlo tree search over joint histories.
//!
//! Every iteration samples one hypothesis per other agent from the belief
//! and keeps it for the whole simulation. The ego descends by UCB; each
//! other agent picks an action through hypothesis-based progressive
//! widening, then either the worst case for the ego (robust modes) or a
//! random expanded action (Bayesian modes). Statistics of other agents are
//! stored per (history node, ego action, agent, hypothesis), so the worst
//! case is taken inside the maximisation over ego actions.

mod complexity;
mod config;
mod tree;

use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use smallvec::SmallVec;

pub use complexity::{complexity_ratio, ComplexityReport, Exponents};
pub use config::{HypothesisSource, OpponentSelection, PlannerConfig, PlannerMode};
pub use tree::{
    select_ego_action, select_other_action, EgoEdge, ExpandedAction, NodeId, OtherChoice,
    OtherStats, PathStep, SearchNode, SearchTree,
};

use crate::behavior_space::{Hypothesis, HypotheticalPolicy};
use crate::belief::BeliefState;
use crate::error::{DomainError, Error, Result};
use crate::{AgentId, Outcome};

/// A deterministic multi-agent world the search can simulate.
///
/// The search clones the world at the root of every iteration and replays
/// joint actions on the clone, so `Clone` should be cheap.
pub trait Environment: Clone {
    fn num_ego_actions(&self) -> usize;

    fn num_other_agents(&self) -> usize;

    fn outcome(&self) -> Outcome;

    fn is_terminal(&self) -> bool {
        self.outcome().is_terminal()
    }

    /// Applies the joint action and returns the ego reward.
    fn step(&mut self, ego_action: usize, others: &[f64]) -> Result<f64, DomainError>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub action: usize,
    /// Mean return per root ego action, `None` when never tried.
    pub q_values: Vec<Option<f64>>,
    pub visits: Vec<u64>,
    pub iterations: usize,
    pub tree_size: usize,
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}

impl SearchResult {
    /// Mean return of the chosen action.
    pub fn root_value(&self) -> f64 {
        self.q_values[self.action].unwrap_or(f64::NEG_INFINITY)
    }
}

/// Runs `cfg.iterations` simulations from `env` and returns the ego action
/// with the highest mean return (lowest index on ties).
///
/// `hypotheses[j]` is agent `j`'s hypothesis list; its length must match the
/// belief's hypothesis count.
pub fn plan<E, P, R>(
    env: &E,
    belief: &BeliefState,
    hypotheses: &[Vec<Hypothesis<P>>],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<SearchResult>
where
    E: Environment,
    P: HypotheticalPolicy<E>,
    R: Rng + ?Sized,
{
    plan_with_tree(env, belief, hypotheses, cfg, rng).map(|(r, _)| r)
}

/// [`plan`] that also hands back the search tree for inspection.
pub fn plan_with_tree<E, P, R>(
    env: &E,
    belief: &BeliefState,
    hypotheses: &[Vec<Hypothesis<P>>],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<(SearchResult, SearchTree)>
where
    E: Environment,
    P: HypotheticalPolicy<E>,
    R: Rng + ?Sized,
{
    let started = Instant::now();
    cfg.validate()?;
    let n_ego = env.num_ego_actions();
    if n_ego == 0 {
        return Err(DomainError::NoEgoActions.into());
    }
    if env.is_terminal() {
        return Err(Error::invalid("cannot plan from a terminal state"));
    }
    let n_agents = env.num_other_agents();
    if hypotheses.len() != n_agents || belief.num_agents() != n_agents {
        return Err(Error::invalid(format!(
            "world has {n_agents} other agents, got {} hypothesis lists and a belief over {}",
            hypotheses.len(),
            belief.num_agents()
        )));
    }
    if let Some(j) = hypotheses.iter().position(|h| h.len() != belief.k()) {
        return Err(Error::invalid(format!(
            "agent {j} has {} hypotheses, belief tracks {}",
            hypotheses[j].len(),
            belief.k()
        )));
    }

    let selection = cfg.mode.selection();
    let sampler = belief.type_sampler();
    let ks: Vec<usize> = hypotheses.iter().map(Vec::len).collect();
    let mut tree = SearchTree::new(n_ego, n_agents, &ks);
    let mut path: Vec<PathStep> = Vec::with_capacity(cfg.max_depth);
    let mut others: Vec<f64> = Vec::with_capacity(n_agents);

    for _ in 0..cfg.iterations {
        let types = sampler.sample(rng);
        let mut world = env.clone();
        let mut node = SearchTree::ROOT;
        path.clear();
        let mut expanded = false;

        while !world.is_terminal() && path.len() < cfg.max_depth && !expanded {
            let ego = select_ego_action(tree.node(node), cfg);
            others.clear();
            let mut picks: SmallVec<[(usize, usize); 8]> = SmallVec::new();
            {
                let edge = tree.node_mut(node).edge_mut(ego);
                for (j, &k) in types.iter().enumerate() {
                    let stats = edge.other_stats_mut(AgentId(j), k);
                    let choice = select_other_action(
                        stats,
                        &hypotheses[j][k],
                        &world,
                        AgentId(j),
                        cfg,
                        selection,
                        rng,
                    )?;
                    others.push(choice.action);
                    picks.push((k, choice.index));
                }
            }
            let reward = world.step(ego, &others)?;
            path.push(PathStep {
                node,
                ego_action: ego,
                others: picks,
                reward,
            });
            let (child, created) = tree.child(node, ego, &others);
            node = child;
            expanded = created;
        }

        let leaf_value = if world.is_terminal() {
            0.0
        } else {
            rollout(&mut world, hypotheses, &types, cfg, rng)?
        };
        tree.backpropagate(&path, leaf_value, cfg.gamma);
    }

    let root = tree.root();
    let q_values: Vec<Option<f64>> = root
        .edges()
        .iter()
        .map(|e| (e.visits() > 0).then_some(e.q()))
        .collect();
    let visits: Vec<u64> = root.edges().iter().map(|e| e.visits()).collect();
    let mut action = 0;
    for (i, q) in q_values.iter().enumerate() {
        let better = match (q, q_values[action]) {
            (Some(q), Some(best)) => *q > best,
            (Some(_), None) => true,
            _ => false,
        };
        if better {
            action = i;
        }
    }
    let result = SearchResult {
        action,
        q_values,
        visits,
        iterations: cfg.iterations,
        tree_size: tree.len(),
        wall_time: started.elapsed(),
    };
    Ok((result, tree))
}

/// Uniform-random ego, other agents drawn from their sampled hypotheses.
/// A cut-off rollout is worth 0 beyond its last step.
fn rollout<E, P, R>(
    world: &mut E,
    hypotheses: &[Vec<Hypothesis<P>>],
    types: &[usize],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<f64>
where
    E: Environment,
    P: HypotheticalPolicy<E>,
    R: Rng + ?Sized,
{
    let n_ego = world.num_ego_actions();
    let mut others = Vec::with_capacity(types.len());
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..cfg.rollout_depth {
        if world.is_terminal() {
            break;
        }
        let ego = rng.random_range(0..n_ego);
        others.clear();
        for (j, &k) in types.iter().enumerate() {
            others.push(hypotheses[j][k].sample_action(&*world, AgentId(j), rng)?);
        }
        total += discount * world.step(ego, &others)?;
        discount *= cfg.gamma;
    }
    Ok(total)
}
