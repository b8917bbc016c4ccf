use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::genome::Behavior;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Deterministic,
    Probabilistic,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Deterministic => "deterministic",
            Condition::Probabilistic => "probabilistic",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(Condition::Deterministic),
            "probabilistic" => Ok(Condition::Probabilistic),
            other => Err(Error::InvalidConfig(format!(
                "unknown condition `{other}` (expected deterministic|probabilistic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOperator {
    /// Add Normal(0, sqrt(variance)) to a triggered gene, then clamp to `[0, 1]`.
    Gaussian,
    /// Set a triggered gene to exactly 1.0 (the historical faulty operator).
    LegacySetToOne,
}

impl MutationOperator {
    pub fn label(self) -> &'static str {
        match self {
            MutationOperator::Gaussian => "gaussian",
            MutationOperator::LegacySetToOne => "legacy_set_to_one",
        }
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MutationOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(MutationOperator::Gaussian),
            "legacy_set_to_one" => Ok(MutationOperator::LegacySetToOne),
            other => Err(Error::InvalidConfig(format!(
                "unknown mutation operator `{other}` (expected gaussian|legacy_set_to_one)"
            ))),
        }
    }
}

/// Every constant of the model plus the condition and operator switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimConfig<F: Scalar> {
    pub initial_agents: usize,
    pub initial_resource: F,
    pub initial_energy: F,
    pub trait_init_range: [F; 2],
    pub noise_init_range: [F; 2],
    pub regrowth_per_round: F,
    pub metabolism_per_round: F,
    pub sanction_cost_factor: F,
    pub observation_window: usize,
    /// Reproduce when energy is strictly above this.
    pub reproduction_threshold: F,
    /// Die when energy is strictly below this.
    pub death_threshold: F,
    pub mutation_probability: F,
    /// Variance of the Gaussian mutation step; the step's sd is its square root.
    pub mutation_variance: F,
    pub condition: Condition,
    pub mutation_operator: MutationOperator,
    /// Per-behaviour noise switch for the probabilistic condition (B, T, S).
    /// A disabled behaviour keeps its noise gene at 0 and never mutates it.
    pub noise_enabled: [bool; 3],
    pub max_rounds: u64,
    pub seed: u64,
    /// Substream index under `seed`; replicate `i` of a batch uses stream `i`.
    pub stream: u64,
}

impl<F: Scalar> Default for SimConfig<F> {
    fn default() -> Self {
        Self {
            initial_agents: 100,
            initial_resource: lit(1000.0),
            initial_energy: lit(10.0),
            trait_init_range: [F::zero(), F::one()],
            noise_init_range: [F::zero(), lit(0.5)],
            regrowth_per_round: lit(100.0),
            metabolism_per_round: lit(0.01),
            sanction_cost_factor: lit(0.1),
            observation_window: 10,
            reproduction_threshold: lit(10.0),
            death_threshold: F::zero(),
            mutation_probability: lit(0.1),
            mutation_variance: lit(0.1),
            condition: Condition::Deterministic,
            mutation_operator: MutationOperator::Gaussian,
            noise_enabled: [true; 3],
            max_rounds: 500,
            seed: 0,
            stream: 0,
        }
    }
}

impl<F: Scalar> SimConfig<F> {
    /// Whether draws of `behavior` are noisy under this configuration.
    pub fn noise_active(&self, behavior: Behavior) -> bool {
        self.condition == Condition::Probabilistic && self.noise_enabled[behavior.index()]
    }

    pub fn mutation_sd(&self) -> F {
        self.mutation_variance.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.initial_agents == 0 {
            return bad("initial_agents must be at least 1".into());
        }
        for (name, [lo, hi]) in [
            ("trait_init_range", self.trait_init_range),
            ("noise_init_range", self.noise_init_range),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return bad(format!("{name} [{lo}, {hi}] is not a valid range"));
            }
            if lo < F::zero() || hi > F::one() {
                return bad(format!("{name} [{lo}, {hi}] must lie within [0, 1]"));
            }
        }
        for (name, v) in [
            ("initial_resource", self.initial_resource),
            ("initial_energy", self.initial_energy),
            ("regrowth_per_round", self.regrowth_per_round),
            ("metabolism_per_round", self.metabolism_per_round),
            ("sanction_cost_factor", self.sanction_cost_factor),
            ("mutation_variance", self.mutation_variance),
        ] {
            if !v.is_finite() || v < F::zero() {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("reproduction_threshold", self.reproduction_threshold),
            ("death_threshold", self.death_threshold),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        let p = self.mutation_probability;
        if !(p >= F::zero() && p <= F::one()) {
            return bad(format!("mutation_probability must lie in [0, 1], got {p}"));
        }
        Ok(())
    }
}
