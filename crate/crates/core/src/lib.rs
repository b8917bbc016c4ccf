//! Seeded agent-based simulator of continuous norm emergence.
//!
//! A population of agents shares one regrowing resource. Each agent carries
//! a bite size, a sanction threshold and a sanction strength, and in the
//! probabilistic condition a heritable noise level for each. Agents eat,
//! sanction the neighbours that ate before them, pay metabolism, die, and
//! reproduce with mutation. Every run is a pure function of its config.
//!
//! The model is generic over the [`Scalar`] float type; [`f64`] aliases are
//! provided at the crate root for everyday use.

pub mod checks;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod model;
pub mod mutation;
pub mod scalar;
pub mod stochastic;

pub use error::{Error, ErrorCategory, Result};
pub use experiment::{
    filter_successful, run_batch, Arm, BatchResult, ExperimentSpec, ExtinctPolicy,
};
pub use metrics::{convergence_report, ConvergenceReport, RoundMetrics, RunResult, Termination};
pub use model::{
    run_simulation, Agent, Behavior, Condition, Gene, Genome, MutationOperator, SimConfig, World,
};
pub use mutation::{mutate_genome, GeneMask, MutationParams};
pub use scalar::Scalar;
pub use stochastic::{RandomStream, GENERATOR_ID};

pub type Genome64 = Genome<f64>;
pub type Agent64 = Agent<f64>;
pub type World64 = World<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type RunResult64 = RunResult<f64>;
pub type ExperimentSpec64 = ExperimentSpec<f64>;
pub type BatchResult64 = BatchResult<f64>;

pub type Genome32 = Genome<f32>;
pub type World32 = World<f32>;
pub type SimConfig32 = SimConfig<f32>;
pub type RunResult32 = RunResult<f32>;
