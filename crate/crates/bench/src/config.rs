//! Experiment configuration files (TOML).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rsbg_core::crossing::{CrossingParams, TrueSpaceVariant};
use rsbg_core::lanechange::{HypothesisKind, LaneChangeParams};
use rsbg_core::search::HypothesisSource;
use rsbg_core::{PlannerConfig, PlannerMode, ZeroEvidenceFallback};
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Crossing,
    Lanechange,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Crossing => "crossing",
            DomainKind::Lanechange => "lanechange",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub domain: DomainKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Results directory; the CLI `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Search settings shared by every planner unless overridden.
    #[serde(default)]
    pub search: PlannerConfig,
    #[serde(default)]
    pub belief: BeliefOptions,
    #[serde(default)]
    pub metrics: MetricOptions,
    #[serde(default)]
    pub crossing: CrossingOptions,
    #[serde(default)]
    pub lanechange: LaneChangeParams,
    pub planners: Vec<PlannerSpec>,
}

fn default_name() -> String {
    "experiment".to_string()
}

fn default_trials() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefOptions {
    pub m_samples: usize,
    /// Likelihood tolerance; 10% of the domain's action range when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub fallback: ZeroEvidenceFallback,
}

impl Default for BeliefOptions {
    fn default() -> Self {
        Self {
            m_samples: 100,
            tolerance: None,
            fallback: ZeroEvidenceFallback::Prior,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// Number of leading trials averaged into the belief-std curve.
    pub belief_std_trials: usize,
    /// Number of leading steps recorded per trial.
    pub belief_std_steps: usize,
    /// Keep per-step ego actions in every record.
    pub trace: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            belief_std_trials: 10,
            belief_std_steps: 10,
            trace: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingOptions {
    pub true_space: TrueSpaceVariant,
    /// World geometry, the `[crossing.world]` table.
    #[serde(rename = "world")]
    pub params: CrossingParams,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self {
            true_space: TrueSpaceVariant::Symmetric,
            params: CrossingParams::default(),
        }
    }
}

/// One planner of the experiment. Unset fields fall back to `[search]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub mode: PlannerMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Hypothesis count for partition modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Lane-change hypothesis space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_kind: Option<HypothesisKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucb_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rollout_depth: Option<usize>,
}

impl PlannerSpec {
    pub fn new(mode: PlannerMode) -> Self {
        Self {
            mode,
            id: None,
            k: None,
            hypothesis_kind: None,
            iterations: None,
            gamma: None,
            k0: None,
            alpha0: None,
            ucb_c: None,
            max_depth: None,
            rollout_depth: None,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn uses_partition(&self) -> bool {
        self.mode.hypothesis_source() == HypothesisSource::Partition
    }
}

/// A planner with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedPlanner {
    pub id: String,
    pub search: PlannerConfig,
    /// Hypotheses per agent: the partition size, or 1.
    pub k: usize,
    /// Cells per behavior axis of the partition.
    pub cells: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_kind: Option<HypothesisKind>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        // An unreadable config is a config error, not an output failure.
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            BenchError::Config(m) => BenchError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Every violated constraint as `field.path: message`.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.trials == 0 {
            v.push("trials: must be at least 1".to_string());
        }
        if self.planners.is_empty() {
            v.push("planners: must list at least one planner".to_string());
        }
        v.extend(self.search.violations().into_iter().map(|m| format!("search.{m}")));
        if self.belief.m_samples == 0 {
            v.push("belief.m_samples: must be at least 1".to_string());
        }
        if let Some(t) = self.belief.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                v.push(format!("belief.tolerance: {t} must be positive"));
            }
        }
        match self.domain {
            DomainKind::Crossing => {
                v.extend(self.crossing.params.violations().into_iter().map(|m| format!("crossing.world.{m}")));
                if self.crossing.params.n_agents < 2 {
                    v.push("crossing.world.n_agents: need the ego and at least one other agent".to_string());
                }
            }
            DomainKind::Lanechange => {
                v.extend(self.lanechange.violations().into_iter().map(|m| format!("lanechange.{m}")));
            }
        }
        let mut ids = HashSet::new();
        for (i, p) in self.planners.iter().enumerate() {
            let at = format!("planners[{i}]");
            match self.resolve(p) {
                Ok(r) => {
                    v.extend(r.search.violations().into_iter().map(|m| format!("{at}.{m}")));
                    if !ids.insert(r.id.clone()) {
                        v.push(format!("{at}.id: duplicate planner id `{}`", r.id));
                    }
                }
                Err(m) => v.push(format!("{at}.{m}")),
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(BenchError::Config(v.join("\n")))
        }
    }

    /// Fills in defaults for one planner; errors are `field: message`.
    pub fn resolve(&self, p: &PlannerSpec) -> Result<ResolvedPlanner, String> {
        let mut search = self.search.clone();
        search.mode = p.mode;
        search.iterations = p.iterations.unwrap_or(search.iterations);
        search.gamma = p.gamma.unwrap_or(search.gamma);
        search.k0 = p.k0.unwrap_or(search.k0);
        search.alpha0 = p.alpha0.unwrap_or(search.alpha0);
        search.ucb_c = p.ucb_c.unwrap_or(search.ucb_c);
        search.max_depth = p.max_depth.unwrap_or(search.max_depth);
        search.rollout_depth = p.rollout_depth.unwrap_or(search.rollout_depth);

        let kind = match (self.domain, p.hypothesis_kind) {
            (DomainKind::Crossing, Some(_)) => {
                return Err("hypothesis_kind: only used by the lanechange domain".to_string())
            }
            (DomainKind::Crossing, None) => None,
            (DomainKind::Lanechange, kind) => Some(kind.unwrap_or(HypothesisKind::Velocity1D)),
        };
        let axes = kind.map_or(1, |k| k.params().len());
        let (k, cells) = if p.uses_partition() {
            let k = p.k.unwrap_or(16usize.pow(axes as u32));
            if k == 0 {
                return Err("k: must be at least 1".to_string());
            }
            let side = (k as f64).powf(1.0 / axes as f64).round() as usize;
            if side.pow(axes as u32) != k {
                return Err(format!("k: {k} is not a perfect power for a {axes}-axis partition"));
            }
            (k, vec![side; axes])
        } else {
            if p.k.is_some_and(|k| k != 1) {
                return Err(format!("k: {} uses a single hypothesis, k must be 1 or absent", p.mode));
            }
            (1, vec![1; axes])
        };
        let id = p.id.clone().unwrap_or_else(|| {
            let full_info = p.mode.hypothesis_source() == HypothesisSource::TrueSpace;
            match kind {
                Some(kind) if !full_info && p.uses_partition() => format!("{}-{kind}-K{k}", p.mode),
                Some(kind) if !full_info => format!("{}-{kind}", p.mode),
                _ if p.uses_partition() => format!("{}-K{k}", p.mode),
                _ => p.mode.to_string(),
            }
        });
        if id.is_empty() || id.contains(|c: char| c == ',' || c == '/' || c.is_whitespace()) {
            return Err(format!("id: `{id}` must be nonempty without commas, slashes or spaces"));
        }
        Ok(ResolvedPlanner {
            id,
            search,
            k,
            cells,
            hypothesis_kind: kind,
        })
    }

    /// All planners resolved; call after validation.
    pub fn resolved_planners(&self) -> Result<Vec<ResolvedPlanner>, BenchError> {
        self.planners
            .iter()
            .enumerate()
            .map(|(i, p)| self.resolve(p).map_err(|m| BenchError::Config(format!("planners[{i}].{m}"))))
            .collect()
    }
}
