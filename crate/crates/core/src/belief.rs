//! Sum-posterior belief over hypotheses, one probability vector per agent.
//!
//! The likelihood of a hypothesis after `t` observations is the average of
//! its per-step action likelihoods, `L_k = (1/t) Σ ℓ_k^τ`, and the posterior
//! is `Pr(k) ∝ L_k · prior_k`. Unlike a product posterior, a single
//! observation with zero likelihood under every hypothesis cannot wipe the
//! belief out.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behavior_space::{Hypothesis, HypotheticalPolicy};
use crate::error::{Error, Result};
use crate::AgentId;

const SUM_TOLERANCE: f64 = 1e-9;

/// What the posterior becomes when every hypothesis has zero accumulated
/// likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroEvidenceFallback {
    #[default]
    Prior,
    Previous,
}

/// Monte-Carlo settings for [`Hypothesis::action_likelihood`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodConfig {
    pub m_samples: usize,
    pub tolerance: f64,
}

impl LikelihoodConfig {
    pub const DEFAULT_SAMPLES: usize = 100;

    /// Default tolerance: 10% of the action range.
    pub fn for_action_range(lower: f64, upper: f64) -> Self {
        Self {
            m_samples: Self::DEFAULT_SAMPLES,
            tolerance: 0.1 * (upper - lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    posteriors: Vec<Vec<f64>>,
    priors: Vec<f64>,
    likelihood_sums: Vec<Vec<f64>>,
    observations: Vec<u64>,
    step_count: u64,
    fallback: ZeroEvidenceFallback,
}

impl BeliefState {
    /// Every agent starts at `priors`, uniform `1/k` when absent.
    pub fn new(num_agents: usize, k: usize, priors: Option<&[f64]>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("belief needs at least one hypothesis"));
        }
        let priors = match priors {
            None => vec![1.0 / k as f64; k],
            Some(p) => {
                if p.len() != k {
                    return Err(Error::invalid(format!(
                        "prior has length {}, expected {k}",
                        p.len()
                    )));
                }
                if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(Error::invalid("prior entries must be finite and nonnegative"));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::invalid(format!("prior sums to {sum}, not 1")));
                }
                p.to_vec()
            }
        };
        Ok(Self {
            posteriors: vec![priors.clone(); num_agents],
            likelihood_sums: vec![vec![0.0; k]; num_agents],
            observations: vec![0; num_agents],
            priors,
            step_count: 0,
            fallback: ZeroEvidenceFallback::default(),
        })
    }

    pub fn with_fallback(mut self, fallback: ZeroEvidenceFallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn k(&self) -> usize {
        self.priors.len()
    }

    pub fn num_agents(&self) -> usize {
        self.posteriors.len()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn posterior(&self, agent: AgentId) -> Option<&[f64]> {
        self.posteriors.get(agent.0).map(Vec::as_slice)
    }

    pub fn posteriors(&self) -> &[Vec<f64>] {
        &self.posteriors
    }

    /// All posterior entries, agent-major.
    pub fn flatten(&self) -> Vec<f64> {
        self.posteriors.iter().flatten().copied().collect()
    }

    /// Folds one step of per-hypothesis likelihoods for `agent` into the
    /// posterior.
    pub fn update_with_likelihoods(&self, agent: AgentId, likelihoods: &[f64]) -> Result<Self> {
        let j = agent.0;
        if j >= self.num_agents() {
            return Err(Error::invalid(format!("unknown {agent}")));
        }
        if likelihoods.len() != self.k() {
            return Err(Error::invalid(format!(
                "got {} likelihoods for {} hypotheses",
                likelihoods.len(),
                self.k()
            )));
        }
        if likelihoods.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(Error::invalid("likelihoods must be finite and nonnegative"));
        }
        let mut next = self.clone();
        next.observations[j] += 1;
        let t = next.observations[j] as f64;
        for (acc, &l) in next.likelihood_sums[j].iter_mut().zip(likelihoods) {
            *acc += l;
        }
        let unnormalised: Vec<f64> = next.likelihood_sums[j]
            .iter()
            .zip(&next.priors)
            .map(|(&s, &p)| s / t * p)
            .collect();
        let z: f64 = unnormalised.iter().sum();
        next.posteriors[j] = if z > 0.0 {
            unnormalised.iter().map(|&u| u / z).collect()
        } else {
            match self.fallback {
                ZeroEvidenceFallback::Prior => next.priors.clone(),
                ZeroEvidenceFallback::Previous => self.posteriors[j].clone(),
            }
        };
        Ok(next)
    }

    /// Updates `agent` from one observed action, estimating each
    /// hypothesis' likelihood by Monte-Carlo preimage counting.
    #[allow(clippy::too_many_arguments)]
    pub fn update<S, P, R>(
        &self,
        agent: AgentId,
        observed: f64,
        history: &S,
        hypotheses: &[Hypothesis<P>],
        likelihood: LikelihoodConfig,
        rng: &mut R,
    ) -> Result<Self>
    where
        S: ?Sized,
        P: HypotheticalPolicy<S>,
        R: Rng + ?Sized,
    {
        if agent.0 >= self.num_agents() {
            return Err(Error::invalid(format!("unknown {agent}")));
        }
        if hypotheses.len() != self.k() {
            return Err(Error::invalid(format!(
                "got {} hypotheses for a belief over {}",
                hypotheses.len(),
                self.k()
            )));
        }
        let ls = hypotheses
            .iter()
            .map(|h| {
                h.action_likelihood(
                    history,
                    agent,
                    observed,
                    likelihood.m_samples,
                    likelihood.tolerance,
                    rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        self.update_with_likelihoods(agent, &ls)
    }

    /// Updates every agent from one joint observation and advances the step
    /// counter. `hypotheses[j]` is agent `j`'s hypothesis list.
    pub fn update_all<S, P, R>(
        &self,
        observed: &[f64],
        history: &S,
        hypotheses: &[Vec<Hypothesis<P>>],
        likelihood: LikelihoodConfig,
        rng: &mut R,
    ) -> Result<Self>
    where
        S: ?Sized,
        P: HypotheticalPolicy<S>,
        R: Rng + ?Sized,
    {
        if observed.len() != self.num_agents() || hypotheses.len() != self.num_agents() {
            return Err(Error::invalid(format!(
                "joint observation covers {} agents and {} hypothesis lists, belief has {}",
                observed.len(),
                hypotheses.len(),
                self.num_agents()
            )));
        }
        let mut next = self.clone();
        for (j, (&a, hyps)) in observed.iter().zip(hypotheses).enumerate() {
            next = next.update(AgentId(j), a, history, hyps, likelihood, rng)?;
        }
        next.step_count += 1;
        Ok(next)
    }

    /// Independent categorical draw of one hypothesis index per agent.
    pub fn sample_joint_type<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.type_sampler().sample(rng)
    }

    /// Precomputed categorical samplers, reused across search iterations.
    pub fn type_sampler(&self) -> JointTypeSampler {
        JointTypeSampler {
            per_agent: self
                .posteriors
                .iter()
                .map(|p| {
                    if p.len() == 1 {
                        None
                    } else {
                        Some(WeightedIndex::new(p).expect("posterior is a probability vector"))
                    }
                })
                .collect(),
        }
    }

    /// Population standard deviation of every posterior entry, scaled by
    /// `K` so a uniform belief scores 0 regardless of the hypothesis count.
    pub fn normalized_std(&self) -> f64 {
        let values = self.flatten();
        if values.is_empty() {
            return 0.0;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() * self.k() as f64
    }
}

#[derive(Debug, Clone)]
pub struct JointTypeSampler {
    per_agent: Vec<Option<WeightedIndex<f64>>>,
}

impl JointTypeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.per_agent
            .iter()
            .map(|d| d.as_ref().map_or(0, |d| d.sample(rng)))
            .collect()
    }
}
