//! Small finite two-player games with known exact values.
//!
//! The ego and one other agent act simultaneously for `depth` steps; the
//! ego reward comes from a table indexed by the joint-action history. The
//! other agent's hypothetical policy maps a scalar `β ∈ [0, 1]` to action
//! `floor(β·m)`, so a single hypothesis over `[0, 1]` draws its actions
//! uniformly.

use std::sync::Arc;

use rand::Rng;

use crate::behavior_space::{BehaviorSpace, BehaviorState, Hypothesis, HypotheticalPolicy};
use crate::error::{DomainError, Error, Result};
use crate::search::Environment;
use crate::{AgentId, Outcome};

#[derive(Debug, Clone, PartialEq)]
pub struct TabularGame {
    depth: usize,
    ego_actions: usize,
    other_actions: usize,
    /// `rewards[node][e * other_actions + o]`; nodes are numbered
    /// breadth-first over joint-action histories.
    rewards: Arc<Vec<Vec<f64>>>,
}

impl TabularGame {
    pub fn new(depth: usize, ego_actions: usize, other_actions: usize, rewards: Vec<Vec<f64>>) -> Result<Self> {
        if depth == 0 || ego_actions == 0 || other_actions == 0 {
            return Err(Error::invalid("depth and action counts must be positive"));
        }
        let joint = ego_actions * other_actions;
        let nodes: usize = (0..depth).map(|d| joint.pow(d as u32)).sum();
        if rewards.len() != nodes || rewards.iter().any(|r| r.len() != joint) {
            return Err(Error::invalid(format!(
                "expected {nodes} reward rows of length {joint}"
            )));
        }
        Ok(Self {
            depth,
            ego_actions,
            other_actions,
            rewards: Arc::new(rewards),
        })
    }

    /// Rewards drawn uniformly from `[0, 1]`.
    pub fn random<R: Rng + ?Sized>(depth: usize, ego_actions: usize, other_actions: usize, rng: &mut R) -> Result<Self> {
        let joint = ego_actions * other_actions;
        let nodes: usize = (0..depth).map(|d| joint.pow(d as u32)).sum();
        let rewards = (0..nodes)
            .map(|_| (0..joint).map(|_| rng.random::<f64>()).collect())
            .collect();
        Self::new(depth, ego_actions, other_actions, rewards)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn ego_actions(&self) -> usize {
        self.ego_actions
    }

    pub fn other_actions(&self) -> usize {
        self.other_actions
    }

    /// Reward for joint action `(e, o)` at breadth-first node `node`.
    pub fn reward(&self, node: usize, e: usize, o: usize) -> f64 {
        self.rewards[node][e * self.other_actions + o]
    }

    /// Breadth-first index of the node reached from `node` by `(e, o)`.
    pub fn child(&self, node: usize, e: usize, o: usize) -> usize {
        node * self.ego_actions * self.other_actions + e * self.other_actions + o + 1
    }

    pub fn start(&self) -> TabularState {
        TabularState {
            game: self.clone(),
            node: 0,
            level: 0,
        }
    }

    /// The single-hypothesis list covering every opponent action.
    pub fn full_hypothesis(&self) -> Vec<Hypothesis<UniformIndexPolicy>> {
        let cell = BehaviorSpace::interval("beta", 0.0, 1.0).expect("unit interval");
        vec![Hypothesis::new(0, cell, Arc::new(UniformIndexPolicy))]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularState {
    game: TabularGame,
    node: usize,
    level: usize,
}

impl TabularState {
    pub fn game(&self) -> &TabularGame {
        &self.game
    }

    pub fn node(&self) -> usize {
        self.node
    }
}

impl Environment for TabularState {
    fn num_ego_actions(&self) -> usize {
        self.game.ego_actions
    }

    fn num_other_agents(&self) -> usize {
        1
    }

    fn outcome(&self) -> Outcome {
        if self.level >= self.game.depth {
            Outcome::Success
        } else {
            Outcome::Running
        }
    }

    fn step(&mut self, ego_action: usize, others: &[f64]) -> Result<f64, DomainError> {
        if ego_action >= self.game.ego_actions {
            return Err(DomainError::UnknownEgoAction(ego_action));
        }
        let &[o] = others else {
            return Err(DomainError::JointActionArity {
                expected: 1,
                got: others.len(),
            });
        };
        let m = self.game.other_actions;
        if !(o >= 0.0 && o < m as f64 && o.fract() == 0.0) {
            return Err(DomainError::ActionOutOfRange {
                value: o,
                lower: 0.0,
                upper: (m - 1) as f64,
            });
        }
        let o = o as usize;
        let r = self.game.reward(self.node, ego_action, o);
        self.node = self.game.child(self.node, ego_action, o);
        self.level += 1;
        Ok(r)
    }
}

/// Maps `β ∈ [0, 1]` to opponent action index `floor(β·m)`, capped at `m − 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformIndexPolicy;

impl HypotheticalPolicy<TabularState> for UniformIndexPolicy {
    fn act(&self, state: &TabularState, _agent: AgentId, beta: &BehaviorState) -> Result<f64, DomainError> {
        let m = state.game.other_actions;
        Ok(((beta[0] * m as f64).floor() as usize).min(m - 1) as f64)
    }
}
