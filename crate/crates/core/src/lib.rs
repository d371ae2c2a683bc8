//! Planning over continuous behavior spaces of other agents.
//!
//! The crate is organised around four pieces:
//!
//! - [`behavior_space`]: axis-aligned behavior spaces, equal-volume partitions
//!   and the hypotheses induced by a shared hypothetical policy.
//! - [`belief`]: the per-agent sum-posterior over hypotheses.
//! - [`search`]: one Monte-Carlo tree search parameterised to act as an
//!   RSBG, SBG, RMDP or MDP planner.
//! - [`crossing`] and [`lanechange`]: the two benchmark worlds, plus
//!   [`tabular`], tiny finite games with exactly computable values.
//!
//! Other-agent actions are real scalars in both worlds, so the library uses
//! `f64` for them throughout.

pub mod behavior_space;
pub mod belief;
pub mod crossing;
pub mod error;
pub mod lanechange;
pub mod search;
pub mod tabular;

use serde::{Deserialize, Serialize};

pub use behavior_space::{
    BehaviorSpace, BehaviorState, Dimension, Hypothesis, HypotheticalPolicy, Partition,
};
pub use belief::{BeliefState, ZeroEvidenceFallback};
pub use error::{DomainError, Error, Result};
pub use search::{Environment, PlannerConfig, PlannerMode, SearchResult};

/// Index of an *other* agent (the ego is never addressed by id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "agent#{}", self.0)
    }
}

/// Episode outcome from the ego's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Running,
    Success,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        !matches!(self, Outcome::Running)
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Outcome::Running => "running",
            Outcome::Success => "success",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        };
        f.write_str(s)
    }
}

/// Ego reward shared by both worlds.
pub const COLLISION_REWARD: f64 = -1000.0;
pub const GOAL_REWARD: f64 = 100.0;

pub(crate) fn outcome_reward(outcome: Outcome) -> f64 {
    match outcome {
        Outcome::Collision => COLLISION_REWARD,
        Outcome::Success => GOAL_REWARD,
        _ => 0.0,
    }
}
