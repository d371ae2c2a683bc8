//! Chain-intersection world.
//!
//! Every agent moves along its own 1-D chain `x ∈ [0, 17]` with
//! `x' = x + a`; all chains meet at `x = 15`. The ego collides when it
//! passes the intersection during the same step as any other agent. Other
//! agents follow a desired-gap policy whose gap `Ω` is redrawn every step
//! from a per-trial interval hidden from the ego.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behavior_space::{BehaviorSpace, BehaviorState, Hypothesis, HypotheticalPolicy};
use crate::error::{DomainError, Error, Result};
use crate::search::Environment;
use crate::{outcome_reward, AgentId, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingParams {
    /// Total agent count, ego included.
    pub n_agents: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub x_intersect: f64,
    pub x_goal: f64,
    pub initial_position: f64,
    pub min_velocity: f64,
    pub max_velocity: f64,
    pub ego_actions: Vec<f64>,
    pub episode_cap: u32,
}

impl Default for CrossingParams {
    fn default() -> Self {
        Self {
            n_agents: 9,
            x_min: 0.0,
            x_max: 17.0,
            x_intersect: 15.0,
            x_goal: 17.0,
            initial_position: 5.0,
            min_velocity: -5.0,
            max_velocity: 5.0,
            ego_actions: vec![-1.0, 0.0, 1.0, 2.0],
            episode_cap: 50,
        }
    }
}

impl CrossingParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_agents < 1 {
            v.push("n_agents: must be at least 1".into());
        }
        if !(self.x_min < self.x_intersect && self.x_intersect < self.x_goal && self.x_goal <= self.x_max) {
            v.push(format!(
                "x_intersect/x_goal: need x_min < x_intersect < x_goal <= x_max, got {} < {} < {} <= {}",
                self.x_min, self.x_intersect, self.x_goal, self.x_max
            ));
        }
        if !(self.x_min <= self.initial_position && self.initial_position <= self.x_max) {
            v.push("initial_position: outside the chain".into());
        }
        if !(self.min_velocity < self.max_velocity) {
            v.push("min_velocity/max_velocity: need min < max".into());
        }
        if self.ego_actions.is_empty() {
            v.push("ego_actions: must not be empty".into());
        }
        if self.episode_cap == 0 {
            v.push("episode_cap: must be at least 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(v.join("; ")))
        }
    }
}

/// Desired-gap policy of an other agent.
///
/// The ego is predicted one step ahead with its last action; the agent
/// steers toward `predicted_ego − Ω`. With `Ω > 0` it simply closes the gap
/// error within the velocity limits. With `Ω ≤ 0` (wants to be ahead) it
/// additionally never drops below its own previous action.
pub fn gap_policy(
    ego_position: f64,
    ego_last_action: f64,
    own_position: f64,
    own_last_action: f64,
    omega: f64,
    min_velocity: f64,
    max_velocity: f64,
) -> f64 {
    let predicted_ego = ego_position + ego_last_action;
    let gap_error = predicted_ego - omega - own_position;
    let a = gap_error.clamp(min_velocity, max_velocity);
    if omega > 0.0 {
        a
    } else {
        a.max(own_last_action)
    }
}

/// Simulated true space the per-trial intervals are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrueSpaceVariant {
    Symmetric,
    Unsymmetric,
}

impl TrueSpaceVariant {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            TrueSpaceVariant::Symmetric => (-5.0, 5.0),
            TrueSpaceVariant::Unsymmetric => (-2.5, 5.0),
        }
    }
}

/// Per-agent hidden desired-gap intervals `[Ω_left, Ω_right]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueBehaviorDraw {
    pub intervals: Vec<(f64, f64)>,
}

impl TrueBehaviorDraw {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((i, _)) = intervals
            .iter()
            .enumerate()
            .find(|(_, (l, r))| !(l <= r) || !l.is_finite() || !r.is_finite())
        {
            return Err(Error::invalid(format!("interval {i} has left > right")));
        }
        Ok(Self { intervals })
    }

    /// Two independent uniforms on the variant's bounds, sorted.
    pub fn sample<R: Rng + ?Sized>(n_others: usize, variant: TrueSpaceVariant, rng: &mut R) -> Self {
        let (lo, hi) = variant.bounds();
        let intervals = (0..n_others)
            .map(|_| {
                let a = lo + (hi - lo) * rng.random::<f64>();
                let b = lo + (hi - lo) * rng.random::<f64>();
                (a.min(b), a.max(b))
            })
            .collect();
        Self { intervals }
    }

    /// The agent's interval as a behavior space, widened by a hair when it
    /// is degenerate.
    pub fn as_space(&self, agent: AgentId) -> Result<BehaviorSpace> {
        let &(l, r) = self
            .intervals
            .get(agent.0)
            .ok_or_else(|| Error::invalid(format!("no interval for {agent}")))?;
        let r = if r > l { r } else { l + 1e-9 * l.abs().max(1.0) };
        BehaviorSpace::interval("desired_gap", l, r)
    }
}

/// The expert-defined full desired-gap range.
pub fn expert_full_space() -> BehaviorSpace {
    BehaviorSpace::interval("desired_gap", -10.0, 10.0).expect("static bounds are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingWorld {
    params: Arc<CrossingParams>,
    /// Index 0 is the ego, index `j + 1` is other agent `j`.
    positions: Vec<f64>,
    last_actions: Vec<f64>,
    crossed: Vec<bool>,
    step: u32,
    outcome: Outcome,
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub reward: f64,
    pub outcome: Outcome,
}

impl CrossingWorld {
    pub fn new(params: CrossingParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_agents;
        Ok(Self {
            positions: vec![params.initial_position; n],
            last_actions: vec![0.0; n],
            crossed: vec![false; n],
            step: 0,
            outcome: Outcome::Running,
            params: Arc::new(params),
        })
    }

    /// Overrides positions (ego first); used for scripted scenarios.
    pub fn with_positions(mut self, positions: &[f64]) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(Error::invalid("position vector has the wrong length"));
        }
        for (dst, &p) in self.positions.iter_mut().zip(positions) {
            *dst = p.clamp(self.params.x_min, self.params.x_max);
        }
        Ok(self)
    }

    pub fn with_last_actions(mut self, actions: &[f64]) -> Result<Self> {
        if actions.len() != self.last_actions.len() {
            return Err(Error::invalid("action vector has the wrong length"));
        }
        self.last_actions.copy_from_slice(actions);
        Ok(self)
    }

    pub fn params(&self) -> &CrossingParams {
        &self.params
    }

    pub fn ego_position(&self) -> f64 {
        self.positions[0]
    }

    pub fn ego_last_action(&self) -> f64 {
        self.last_actions[0]
    }

    pub fn other_position(&self, agent: AgentId) -> f64 {
        self.positions[agent.0 + 1]
    }

    pub fn other_last_action(&self, agent: AgentId) -> f64 {
        self.last_actions[agent.0 + 1]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn last_actions(&self) -> &[f64] {
        &self.last_actions
    }

    pub fn crossed(&self) -> &[bool] {
        &self.crossed
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    pub fn n_others(&self) -> usize {
        self.positions.len() - 1
    }

    /// Desired-gap action of `agent` for a given `Ω`.
    pub fn policy_action(&self, agent: AgentId, omega: f64) -> f64 {
        gap_policy(
            self.ego_position(),
            self.ego_last_action(),
            self.other_position(agent),
            self.other_last_action(agent),
            omega,
            self.params.min_velocity,
            self.params.max_velocity,
        )
    }

    /// Redraws every agent's `Ω` from its hidden interval and applies the
    /// gap policy. Consumes exactly one uniform per agent.
    pub fn simulate_others<R: Rng + ?Sized>(&self, draws: &TrueBehaviorDraw, rng: &mut R) -> Result<Vec<f64>> {
        if draws.intervals.len() != self.n_others() {
            return Err(Error::invalid(format!(
                "{} intervals for {} other agents",
                draws.intervals.len(),
                self.n_others()
            )));
        }
        Ok(draws
            .intervals
            .iter()
            .enumerate()
            .map(|(j, &(l, r))| {
                let omega = l + (r - l) * rng.random::<f64>();
                self.policy_action(AgentId(j), omega)
            })
            .collect())
    }

    /// Applies the ego action value and the other agents' actions.
    pub fn step_values(&mut self, ego_action: f64, others: &[f64]) -> Result<StepReport> {
        if self.outcome.is_terminal() {
            return Err(Error::invalid("episode already finished"));
        }
        if others.len() != self.n_others() {
            return Err(DomainError::JointActionArity {
                expected: self.n_others(),
                got: others.len(),
            }
            .into());
        }
        let p = &*self.params;
        for &a in others {
            if !(p.min_velocity <= a && a <= p.max_velocity) {
                return Err(DomainError::ActionOutOfRange {
                    value: a,
                    lower: p.min_velocity,
                    upper: p.max_velocity,
                }
                .into());
            }
        }
        let (x_min, x_max, x_int) = (p.x_min, p.x_max, p.x_intersect);
        let mut ego_crossed = false;
        let mut other_crossed = false;
        for (i, a) in std::iter::once(ego_action).chain(others.iter().copied()).enumerate() {
            let before = self.positions[i];
            let after = (before + a).clamp(x_min, x_max);
            if !self.crossed[i] && before < x_int && x_int <= after {
                self.crossed[i] = true;
                if i == 0 {
                    ego_crossed = true;
                } else {
                    other_crossed = true;
                }
            }
            self.positions[i] = after;
            self.last_actions[i] = a;
        }
        self.step += 1;
        self.outcome = if ego_crossed && other_crossed {
            Outcome::Collision
        } else if self.positions[0] >= p.x_goal {
            Outcome::Success
        } else if self.step >= p.episode_cap {
            Outcome::Timeout
        } else {
            Outcome::Running
        };
        Ok(StepReport {
            reward: outcome_reward(self.outcome),
            outcome: self.outcome,
        })
    }

    pub fn step_index(&mut self, ego_action: usize, others: &[f64]) -> Result<StepReport> {
        let a = *self
            .params
            .ego_actions
            .get(ego_action)
            .ok_or(DomainError::UnknownEgoAction(ego_action))?;
        self.step_values(a, others)
    }
}

impl Environment for CrossingWorld {
    fn num_ego_actions(&self) -> usize {
        self.params.ego_actions.len()
    }

    fn num_other_agents(&self) -> usize {
        self.n_others()
    }

    fn outcome(&self) -> Outcome {
        self.outcome
    }

    fn step(&mut self, ego_action: usize, others: &[f64]) -> Result<f64, DomainError> {
        self.step_index(ego_action, others)
            .map(|r| r.reward)
            .map_err(|e| match e {
                Error::Domain(d) => d,
                Error::InvalidArgument(m) => DomainError::Other(m),
            })
    }
}

/// The desired-gap policy as a hypothetical policy over a one-dimensional
/// behavior state `β = (Ω)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GapPolicy;

impl HypotheticalPolicy<CrossingWorld> for GapPolicy {
    fn act(&self, world: &CrossingWorld, agent: AgentId, beta: &BehaviorState) -> Result<f64, DomainError> {
        if beta.len() != 1 {
            return Err(DomainError::BehaviorArity {
                expected: 1,
                got: beta.len(),
            });
        }
        if agent.0 >= world.n_others() {
            return Err(DomainError::UnknownAgent(agent.0));
        }
        Ok(world.policy_action(agent, beta[0]))
    }
}

/// One-cell hypothesis lists built from the true intervals.
pub fn true_space_hypotheses(draws: &TrueBehaviorDraw) -> Result<Vec<Vec<Hypothesis<GapPolicy>>>> {
    let policy = Arc::new(GapPolicy);
    (0..draws.intervals.len())
        .map(|j| Ok(vec![Hypothesis::new(0, draws.as_space(AgentId(j))?, Arc::clone(&policy))]))
        .collect()
}
