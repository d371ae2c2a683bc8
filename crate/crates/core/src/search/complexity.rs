use serde::Serialize;

use crate::error::{Error, Result};

/// `|𝔅|^behavior · K^hypotheses`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Exponents {
    pub behavior: i64,
    pub hypotheses: i64,
}

impl Exponents {
    /// Natural log of the expression for a concrete `|𝔅|` and `K`.
    pub fn ln_value(&self, behavior_samples: f64, k: usize) -> f64 {
        self.behavior as f64 * behavior_samples.ln() + self.hypotheses as f64 * (k as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub n_agents: u32,
    pub horizon: u32,
    /// `|𝔅|^{N'·t} K^{N' − N'·t}` with `N' = N − 1` other agents.
    pub sbg: Exponents,
    /// `|𝔅|^{t} K^{N − t}`.
    pub rsbg: Exponents,
    /// Exact exponents of `sbg / rsbg`.
    pub quotient: Exponents,
    /// `e` in the simplified ratio `(|𝔅|/K)^e = (|𝔅|/K)^{N'·t}`, the joint
    /// action-sequence term the robust search removes.
    pub ratio_exponent: i64,
}

/// Sample-complexity exponents of the Bayesian and robust searches for `N`
/// agents (ego included) and prediction horizon `t`.
pub fn complexity_ratio(n_agents: u32, horizon: u32) -> Result<ComplexityReport> {
    if n_agents < 2 {
        return Err(Error::invalid("complexity needs at least two agents"));
    }
    if horizon < 1 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let n = i64::from(n_agents);
    let t = i64::from(horizon);
    let others = n - 1;
    let sbg = Exponents {
        behavior: others * t,
        hypotheses: others - others * t,
    };
    let rsbg = Exponents {
        behavior: t,
        hypotheses: n - t,
    };
    let quotient = Exponents {
        behavior: sbg.behavior - rsbg.behavior,
        hypotheses: sbg.hypotheses - rsbg.hypotheses,
    };
    Ok(ComplexityReport {
        n_agents,
        horizon,
        sbg,
        rsbg,
        quotient,
        ratio_exponent: others * t,
    })
}

impl std::fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "N = {}, t = {}", self.n_agents, self.horizon)?;
        writeln!(
            f,
            "O_SBG  = |B|^{} * K^{}",
            self.sbg.behavior, self.sbg.hypotheses
        )?;
        writeln!(
            f,
            "O_RSBG = |B|^{} * K^{}",
            self.rsbg.behavior, self.rsbg.hypotheses
        )?;
        writeln!(
            f,
            "O_SBG / O_RSBG = |B|^{} * K^{}",
            self.quotient.behavior, self.quotient.hypotheses
        )?;
        write!(f, "ratio ~ (|B|/K)^{}", self.ratio_exponent)
    }
}
