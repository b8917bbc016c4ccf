//! Gene-wise mutation applied to a child genome at reproduction.

use serde::{Deserialize, Serialize};

use crate::model::config::{Condition, MutationOperator, SimConfig};
use crate::model::genome::{Gene, Genome};
use crate::scalar::Scalar;
use crate::stochastic::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MutationParams<F: Scalar> {
    pub probability_per_gene: F,
    pub variance: F,
    pub operator: MutationOperator,
}

impl<F: Scalar> MutationParams<F> {
    pub fn from_config(config: &SimConfig<F>) -> Self {
        Self {
            probability_per_gene: config.mutation_probability,
            variance: config.mutation_variance,
            operator: config.mutation_operator,
        }
    }
}

/// Which genes are heritable-and-mutable. Noise genes outside the mask stay
/// pinned at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneMask([bool; 6]);

impl GeneMask {
    pub const ALL: GeneMask = GeneMask([true; 6]);
    pub const BEHAVIOR_ONLY: GeneMask = GeneMask([true, true, true, false, false, false]);

    pub fn for_condition(condition: Condition) -> Self {
        match condition {
            Condition::Deterministic => Self::BEHAVIOR_ONLY,
            Condition::Probabilistic => Self::ALL,
        }
    }

    /// Mask honouring the per-behaviour noise switches.
    pub fn from_config<F: Scalar>(config: &SimConfig<F>) -> Self {
        let mut mask = Self::BEHAVIOR_ONLY;
        for gene in Gene::ALL.into_iter().filter(|g| g.is_noise()) {
            mask.0[gene as usize] = config.noise_active(gene.behavior());
        }
        mask
    }

    pub fn contains(self, gene: Gene) -> bool {
        self.0[gene as usize]
    }

    pub fn len(self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

/// Value of a single triggered gene after mutation. `step` is ignored by
/// the legacy operator.
pub fn mutate_gene<F: Scalar>(value: F, operator: MutationOperator, step: F) -> F {
    match operator {
        MutationOperator::Gaussian => (value + step).clamp_unit(),
        MutationOperator::LegacySetToOne => F::one(),
    }
}

/// Copy of `genome` with each masked gene independently mutated with
/// probability `params.probability_per_gene`.
///
/// Draw order per gene, in `Gene::ALL` order: one trigger draw, then (Gaussian
/// operator, triggered only) one normal draw.
pub fn mutate_genome<F: Scalar>(
    genome: &Genome<F>,
    params: &MutationParams<F>,
    mask: GeneMask,
    rng: &mut RandomStream,
) -> Genome<F> {
    let p = params.probability_per_gene.to_f64_lossy();
    let sd = params.variance.sqrt();
    let mut child = *genome;
    for gene in Gene::ALL.into_iter().filter(|&g| mask.contains(g)) {
        if !rng.bernoulli(p) {
            continue;
        }
        let step = match params.operator {
            MutationOperator::Gaussian => rng
                .gaussian(F::zero(), sd)
                .expect("variance validated non-negative"),
            MutationOperator::LegacySetToOne => F::zero(),
        };
        let slot = child.get_mut(gene);
        *slot = mutate_gene(*slot, params.operator, step);
    }
    child
}
