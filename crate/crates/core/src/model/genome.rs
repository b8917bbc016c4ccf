use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// One of the three behaviours an agent expresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    Bite,
    Threshold,
    Strength,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Bite, Behavior::Threshold, Behavior::Strength];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn value_gene(self) -> Gene {
        Gene::ALL[self.index()]
    }

    pub fn noise_gene(self) -> Gene {
        Gene::ALL[self.index() + 3]
    }
}

/// Heritable loci, in the fixed order used for mutation draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gene {
    BiteSize,
    SanctionThreshold,
    SanctionStrength,
    BiteNoise,
    ThresholdNoise,
    StrengthNoise,
}

impl Gene {
    pub const ALL: [Gene; 6] = [
        Gene::BiteSize,
        Gene::SanctionThreshold,
        Gene::SanctionStrength,
        Gene::BiteNoise,
        Gene::ThresholdNoise,
        Gene::StrengthNoise,
    ];

    /// Short column label: B, T, S, BN, TN, SN.
    pub fn label(self) -> &'static str {
        match self {
            Gene::BiteSize => "B",
            Gene::SanctionThreshold => "T",
            Gene::SanctionStrength => "S",
            Gene::BiteNoise => "BN",
            Gene::ThresholdNoise => "TN",
            Gene::StrengthNoise => "SN",
        }
    }

    pub fn is_noise(self) -> bool {
        (self as usize) >= 3
    }

    /// The behaviour this gene controls (directly or as its noise).
    pub fn behavior(self) -> Behavior {
        Behavior::ALL[(self as usize) % 3]
    }
}

/// Heritable traits. Every field stays within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Genome<F: Scalar> {
    pub bite_size: F,
    pub sanction_threshold: F,
    pub sanction_strength: F,
    pub bite_noise: F,
    pub threshold_noise: F,
    pub strength_noise: F,
}

impl<F: Scalar> Genome<F> {
    /// Noise-free genome.
    pub fn deterministic(bite_size: F, sanction_threshold: F, sanction_strength: F) -> Self {
        Self {
            bite_size,
            sanction_threshold,
            sanction_strength,
            bite_noise: F::zero(),
            threshold_noise: F::zero(),
            strength_noise: F::zero(),
        }
    }

    pub fn get(&self, gene: Gene) -> F {
        match gene {
            Gene::BiteSize => self.bite_size,
            Gene::SanctionThreshold => self.sanction_threshold,
            Gene::SanctionStrength => self.sanction_strength,
            Gene::BiteNoise => self.bite_noise,
            Gene::ThresholdNoise => self.threshold_noise,
            Gene::StrengthNoise => self.strength_noise,
        }
    }

    pub fn get_mut(&mut self, gene: Gene) -> &mut F {
        match gene {
            Gene::BiteSize => &mut self.bite_size,
            Gene::SanctionThreshold => &mut self.sanction_threshold,
            Gene::SanctionStrength => &mut self.sanction_strength,
            Gene::BiteNoise => &mut self.bite_noise,
            Gene::ThresholdNoise => &mut self.threshold_noise,
            Gene::StrengthNoise => &mut self.strength_noise,
        }
    }

    pub fn value(&self, behavior: Behavior) -> F {
        self.get(behavior.value_gene())
    }

    pub fn noise(&self, behavior: Behavior) -> F {
        self.get(behavior.noise_gene())
    }

    pub fn is_valid(&self) -> bool {
        Gene::ALL.iter().all(|&g| {
            let v = self.get(g);
            v >= F::zero() && v <= F::one()
        })
    }

    pub fn clamped(mut self) -> Self {
        for g in Gene::ALL {
            let v = self.get_mut(g);
            *v = v.clamp_unit();
        }
        self
    }

    /// Bite size above own sanction threshold.
    pub fn is_hypocrite(&self) -> bool {
        self.bite_size > self.sanction_threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene_behavior_mapping() {
        for b in Behavior::ALL {
            assert_eq!(b.value_gene().behavior(), b);
            assert_eq!(b.noise_gene().behavior(), b);
            assert!(!b.value_gene().is_noise());
            assert!(b.noise_gene().is_noise());
        }
        let labels: Vec<_> = Gene::ALL.iter().map(|g| g.label()).collect();
        assert_eq!(labels, ["B", "T", "S", "BN", "TN", "SN"]);
    }

    #[test]
    fn get_and_set_agree() {
        let mut g = Genome::<f64>::default();
        for (i, gene) in Gene::ALL.into_iter().enumerate() {
            *g.get_mut(gene) = i as f64 / 10.0;
        }
        assert_eq!(g.sanction_strength, 0.2);
        assert_eq!(g.noise(Behavior::Threshold), 0.4);
        assert!(g.is_valid());
    }

    #[test]
    fn clamping() {
        let g = Genome {
            bite_size: 1.5f64,
            sanction_threshold: -0.2,
            ..Default::default()
        };
        assert!(!g.is_valid());
        let c = g.clamped();
        assert_eq!((c.bite_size, c.sanction_threshold), (1.0, 0.0));
    }
}
