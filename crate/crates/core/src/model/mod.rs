//! World state and the round loop.

pub mod config;
pub mod genome;
pub mod world;

use crate::error::Result;
use crate::metrics::{RoundMetrics, RunResult, Termination};
use crate::scalar::Scalar;
use crate::stochastic::{RandomStream, GENERATOR_ID};

pub use config::{Condition, MutationOperator, SimConfig};
pub use genome::{Behavior, Gene, Genome};
pub use world::{draw_effective_behavior, Agent, RoundAccounting, World};

/// Run `config` from initialisation until `max_rounds` or extinction.
///
/// The stream is `RandomStream::substream(config.seed, config.stream)`, so
/// the result is a pure function of the config.
pub fn run_simulation<F: Scalar>(config: &SimConfig<F>) -> Result<RunResult<F>> {
    let mut rng = RandomStream::substream(config.seed, config.stream);
    let mut world = World::init(config, &mut rng)?;
    let mut rounds = Vec::with_capacity(config.max_rounds as usize + 1);
    rounds.push(RoundMetrics::capture(&world));
    let mut termination = Termination::Completed;
    while world.round < config.max_rounds {
        let m = world.step_round(config, &mut rng)?;
        rounds.push(m);
        if world.is_extinct() {
            termination = Termination::Extinction { round: world.round };
            break;
        }
    }
    Ok(RunResult {
        config: config.clone(),
        generator: GENERATOR_ID.to_string(),
        rounds,
        termination,
    })
}
