use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planner variants. Each one is the same search with a different
/// hypothesis source and other-agent selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlannerMode {
    #[serde(rename = "RSBG")]
    Rsbg,
    #[serde(rename = "SBG")]
    Sbg,
    #[serde(rename = "RMDP")]
    Rmdp,
    #[serde(rename = "MDP")]
    Mdp,
    #[serde(rename = "RSBGFullInfo")]
    RsbgFullInfo,
    #[serde(rename = "SBGFullInfo")]
    SbgFullInfo,
}

/// Where a planner's hypotheses come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisSource {
    /// Equal partition of the expert-defined full behavior space.
    Partition,
    /// A single hypothesis spanning the whole full behavior space.
    FullSpace,
    /// A single hypothesis per agent equal to its true behavior box.
    TrueSpace,
}

/// How other agents pick among their expanded actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpponentSelection {
    WorstCase,
    Random,
}

impl PlannerMode {
    pub const ALL: [PlannerMode; 6] = [
        PlannerMode::Rsbg,
        PlannerMode::Sbg,
        PlannerMode::Rmdp,
        PlannerMode::Mdp,
        PlannerMode::RsbgFullInfo,
        PlannerMode::SbgFullInfo,
    ];

    pub fn hypothesis_source(self) -> HypothesisSource {
        match self {
            PlannerMode::Rsbg | PlannerMode::Sbg => HypothesisSource::Partition,
            PlannerMode::Rmdp | PlannerMode::Mdp => HypothesisSource::FullSpace,
            PlannerMode::RsbgFullInfo | PlannerMode::SbgFullInfo => HypothesisSource::TrueSpace,
        }
    }

    pub fn selection(self) -> OpponentSelection {
        match self {
            PlannerMode::Rsbg | PlannerMode::Rmdp | PlannerMode::RsbgFullInfo => {
                OpponentSelection::WorstCase
            }
            PlannerMode::Sbg | PlannerMode::Mdp | PlannerMode::SbgFullInfo => {
                OpponentSelection::Random
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlannerMode::Rsbg => "RSBG",
            PlannerMode::Sbg => "SBG",
            PlannerMode::Rmdp => "RMDP",
            PlannerMode::Mdp => "MDP",
            PlannerMode::RsbgFullInfo => "RSBGFullInfo",
            PlannerMode::SbgFullInfo => "SBGFullInfo",
        }
    }
}

impl std::fmt::Display for PlannerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlannerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown planner mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub mode: PlannerMode,
    pub iterations: usize,
    pub gamma: f64,
    /// Progressive-widening scale `k0`.
    pub k0: f64,
    /// Progressive-widening exponent `α0`.
    pub alpha0: f64,
    pub ucb_c: f64,
    pub max_depth: usize,
    pub rollout_depth: usize,
    /// Seed for callers that do not supply their own random source.
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            mode: PlannerMode::Rsbg,
            iterations: 10_000,
            gamma: 0.9,
            k0: 4.0,
            alpha0: 0.25,
            ucb_c: 2.0 * std::f64::consts::SQRT_2,
            max_depth: 30,
            rollout_depth: 15,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn with_mode(mode: PlannerMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    /// Returns every violated constraint as `field: message`.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.iterations == 0 {
            out.push("iterations: must be at least 1".to_string());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            out.push(format!("gamma: {} not in (0, 1]", self.gamma));
        }
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            out.push(format!("k0: {} must be positive", self.k0));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            out.push(format!("alpha0: {} not in (0, 1)", self.alpha0));
        }
        if !(self.ucb_c > 0.0 && self.ucb_c.is_finite()) {
            out.push(format!("ucb_c: {} must be positive", self.ucb_c));
        }
        if self.max_depth == 0 {
            out.push("max_depth: must be at least 1".to_string());
        }
        if self.rollout_depth == 0 {
            out.push("rollout_depth: must be at least 1".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(v.join("; ")))
        }
    }

    /// Widening bound `ceil(k0 · n^α0)`, never below one so an empty
    /// expansion set always grows.
    pub fn widening_bound(&self, visits: u64) -> usize {
        let raw = self.k0 * (visits as f64).powf(self.alpha0);
        // Absorb powf rounding so exact powers (1, 16, 81, ...) are not bumped up.
        ((raw - 1e-9).ceil().max(1.0)) as usize
    }
}
