use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::RoundMetrics;
use crate::model::config::SimConfig;
use crate::model::genome::{Behavior, Genome};
use crate::mutation::{mutate_genome, GeneMask, MutationParams};
use crate::scalar::Scalar;
use crate::stochastic::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Agent<F: Scalar> {
    pub id: u64,
    pub genome: Genome<F>,
    pub energy: F,
    /// What the agent actually took from the resource this round.
    pub consumed_this_round: F,
}

/// Per-round totals, reset at the start of every round.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RoundAccounting<F: Scalar> {
    pub consumed: F,
    pub metabolism_paid: F,
    pub sanction_damage: F,
    pub sanction_cost: F,
    pub sanctions: u64,
    pub births: u64,
    pub deaths: u64,
    /// Turns where the resource was already empty.
    pub starved_eats: u64,
    /// Energy still held by agents at the moment they were removed.
    pub removed_energy: F,
}

/// Draw the value an agent expresses for `behavior` on one use: Normal
/// around the gene with the matching noise gene as sd, clamped to `[0, 1]`.
/// With noise off, or a noise gene of 0, the gene value comes back exactly
/// and the stream is not advanced.
pub fn draw_effective_behavior<F: Scalar>(
    genome: &Genome<F>,
    behavior: Behavior,
    noise_on: bool,
    rng: &mut RandomStream,
) -> F {
    let value = genome.value(behavior);
    if !noise_on {
        return value;
    }
    rng.gaussian(value, genome.noise(behavior))
        .expect("genome noise lies in [0, 1]")
        .clamp_unit()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct World<F: Scalar> {
    pub resource: F,
    pub agents: Vec<Agent<F>>,
    pub round: u64,
    pub accounting: RoundAccounting<F>,
    next_id: u64,
}

impl<F: Scalar> World<F> {
    /// World with the given agents, all at `energy`.
    pub fn new(resource: F, genomes: impl IntoIterator<Item = Genome<F>>, energy: F) -> Self {
        let agents: Vec<_> = genomes
            .into_iter()
            .enumerate()
            .map(|(i, genome)| Agent {
                id: i as u64,
                genome,
                energy,
                consumed_this_round: F::zero(),
            })
            .collect();
        Self {
            resource,
            next_id: agents.len() as u64,
            agents,
            round: 0,
            accounting: RoundAccounting::default(),
        }
    }

    /// Fresh population drawn from `config`. Per agent the draw order is
    /// B, T, S, then the active noise genes in the same order.
    pub fn init(config: &SimConfig<F>, rng: &mut RandomStream) -> Result<Self> {
        config.validate()?;
        let [tlo, thi] = config.trait_init_range;
        let [nlo, nhi] = config.noise_init_range;
        let mut genomes = Vec::with_capacity(config.initial_agents);
        for _ in 0..config.initial_agents {
            let mut g = Genome::default();
            for b in Behavior::ALL {
                *g.get_mut(b.value_gene()) = rng.uniform(tlo, thi)?;
            }
            for b in Behavior::ALL {
                if config.noise_active(b) {
                    *g.get_mut(b.noise_gene()) = rng.uniform(nlo, nhi)?;
                }
            }
            genomes.push(g);
        }
        Ok(Self::new(
            config.initial_resource,
            genomes,
            config.initial_energy,
        ))
    }

    pub fn population(&self) -> usize {
        self.agents.len()
    }

    pub fn is_extinct(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn total_energy(&self) -> F {
        self.agents.iter().map(|a| a.energy).sum()
    }

    /// Agent at `idx` eats up to `effective_bite` from the shared resource.
    /// Returns the amount actually consumed.
    pub fn eat_turn(&mut self, idx: usize, effective_bite: F) -> F {
        let consumed = effective_bite.min(self.resource).max(F::zero());
        if self.resource <= F::zero() {
            self.accounting.starved_eats += 1;
        }
        let agent = &mut self.agents[idx];
        agent.energy += consumed;
        agent.consumed_this_round = consumed;
        // `min` above keeps this non-negative
        self.resource -= consumed;
        self.accounting.consumed += consumed;
        consumed
    }

    /// Agent at `sanctioner` reviews `window` (indices, most recent first).
    /// Each entry gets its own threshold draw; each executed sanction gets
    /// its own strength draw.
    pub fn sanction_turn(
        &mut self,
        sanctioner: usize,
        window: &[usize],
        config: &SimConfig<F>,
        rng: &mut RandomStream,
    ) {
        let genome = self.agents[sanctioner].genome;
        let t_noise = config.noise_active(Behavior::Threshold);
        let s_noise = config.noise_active(Behavior::Strength);
        for &target in window {
            debug_assert_ne!(target, sanctioner);
            let threshold = draw_effective_behavior(&genome, Behavior::Threshold, t_noise, rng);
            if self.agents[target].consumed_this_round <= threshold {
                continue;
            }
            let strength = draw_effective_behavior(&genome, Behavior::Strength, s_noise, rng);
            let cost = config.sanction_cost_factor * strength;
            self.agents[target].energy -= strength;
            self.agents[sanctioner].energy -= cost;
            self.accounting.sanction_damage += strength;
            self.accounting.sanction_cost += cost;
            self.accounting.sanctions += 1;
        }
    }

    /// Execute one full round and return its end-of-round snapshot.
    ///
    /// Turns (eat, then sanction the preceding window) run in a fresh random
    /// order; then metabolism, removal of agents strictly below the death
    /// threshold, one reproduction per agent strictly above the reproduction
    /// threshold, and regrowth. A snapshot with population 0 means the
    /// population went extinct this round.
    pub fn step_round(
        &mut self,
        config: &SimConfig<F>,
        rng: &mut RandomStream,
    ) -> Result<RoundMetrics> {
        if self.round >= config.max_rounds {
            return Err(Error::InvalidArgument(format!(
                "round {} already reached max_rounds {}",
                self.round, config.max_rounds
            )));
        }
        if self.is_extinct() {
            return Err(Error::InvalidArgument(
                "cannot step an extinct world".into(),
            ));
        }
        self.accounting = RoundAccounting::default();
        for a in &mut self.agents {
            a.consumed_this_round = F::zero();
        }

        let mut order: Vec<usize> = (0..self.agents.len()).collect();
        rng.shuffle(&mut order);

        let bite_noise = config.noise_active(Behavior::Bite);
        let mut window = Vec::with_capacity(config.observation_window);
        for (k, &idx) in order.iter().enumerate() {
            let genome = self.agents[idx].genome;
            let bite = draw_effective_behavior(&genome, Behavior::Bite, bite_noise, rng);
            self.eat_turn(idx, bite);

            window.clear();
            let start = k.saturating_sub(config.observation_window);
            window.extend(order[start..k].iter().rev());
            self.sanction_turn(idx, &window, config, rng);
        }

        let metabolism = config.metabolism_per_round;
        for a in &mut self.agents {
            a.energy -= metabolism;
            self.accounting.metabolism_paid += metabolism;
        }

        let death = config.death_threshold;
        let before = self.agents.len();
        let mut removed = F::zero();
        self.agents.retain(|a| {
            let dies = a.energy < death;
            if dies {
                removed += a.energy;
            }
            !dies
        });
        self.accounting.deaths = (before - self.agents.len()) as u64;
        self.accounting.removed_energy = removed;

        let params = MutationParams::from_config(config);
        let mask = GeneMask::from_config(config);
        let parents = self.agents.len();
        for i in 0..parents {
            if self.agents[i].energy <= config.reproduction_threshold {
                continue;
            }
            let half = self.agents[i].energy / (F::one() + F::one());
            self.agents[i].energy = half;
            let genome = mutate_genome(&self.agents[i].genome, &params, mask, rng);
            let child = Agent {
                id: self.next_id,
                genome,
                energy: half,
                consumed_this_round: F::zero(),
            };
            self.next_id += 1;
            self.agents.push(child);
            self.accounting.births += 1;
        }

        self.resource += config.regrowth_per_round;
        self.round += 1;
        Ok(RoundMetrics::capture(self))
    }
}
