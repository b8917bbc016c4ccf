//! Per-round population statistics and whole-run summaries.
//!
//! Statistics that have no value for an empty population are `None`
//! ("absent") rather than zero, so downstream averages are not biased by
//! extinct runs.

use serde::{Deserialize, Serialize};

use crate::model::config::{Condition, MutationOperator, SimConfig};
use crate::model::genome::{Gene, Genome};
use crate::model::world::{Agent, RoundAccounting, World};
use crate::scalar::Scalar;

/// Mean and population variance of one gene across the living agents.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraitStat {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: u64,
    pub population: u64,
    pub resource: f64,
    /// Indexed in `Gene::ALL` order.
    pub traits: [TraitStat; 6],
    pub hypocrite_fraction: Option<f64>,
    pub sanction_damage: f64,
    pub sanction_cost: f64,
    pub births: u64,
    pub deaths: u64,
    pub total_consumed: f64,
}

/// Column order shared by the run CSV and the aggregate CSV.
pub const COLUMNS: [&str; 21] = [
    "round",
    "population",
    "resource",
    "mean_B",
    "var_B",
    "mean_T",
    "var_T",
    "mean_S",
    "var_S",
    "mean_BN",
    "var_BN",
    "mean_TN",
    "var_TN",
    "mean_SN",
    "var_SN",
    "hypocrite_fraction",
    "sanction_damage",
    "sanction_cost",
    "births",
    "deaths",
    "total_consumed",
];

/// Number of value columns (everything after `round`).
pub const VALUE_COLUMNS: usize = COLUMNS.len() - 1;

impl RoundMetrics {
    /// Values for `COLUMNS[1..]`, `None` where absent.
    pub fn values(&self) -> [Option<f64>; VALUE_COLUMNS] {
        let mut out = [None; VALUE_COLUMNS];
        out[0] = Some(self.population as f64);
        out[1] = Some(self.resource);
        for (i, t) in self.traits.iter().enumerate() {
            out[2 + 2 * i] = t.mean;
            out[3 + 2 * i] = t.variance;
        }
        out[14] = self.hypocrite_fraction;
        out[15] = Some(self.sanction_damage);
        out[16] = Some(self.sanction_cost);
        out[17] = Some(self.births as f64);
        out[18] = Some(self.deaths as f64);
        out[19] = Some(self.total_consumed);
        out
    }

    /// Inverse of [`values`](Self::values). Integer columns are rounded.
    pub fn from_values(round: u64, v: &[Option<f64>; VALUE_COLUMNS]) -> Option<Self> {
        let mut traits = [TraitStat::default(); 6];
        for (i, t) in traits.iter_mut().enumerate() {
            *t = TraitStat {
                mean: v[2 + 2 * i],
                variance: v[3 + 2 * i],
            };
        }
        let int = |x: Option<f64>| x.map(|x| x.round() as u64);
        Some(Self {
            round,
            population: int(v[0])?,
            resource: v[1]?,
            traits,
            hypocrite_fraction: v[14],
            sanction_damage: v[15]?,
            sanction_cost: v[16]?,
            births: int(v[17])?,
            deaths: int(v[18])?,
            total_consumed: v[19]?,
        })
    }

    /// Snapshot of `world` after its most recent round (or at initialisation).
    pub fn capture<F: Scalar>(world: &World<F>) -> Self {
        let mut traits = [TraitStat::default(); 6];
        for (slot, gene) in traits.iter_mut().zip(Gene::ALL) {
            let values: Vec<F> = world.agents.iter().map(|a| a.genome.get(gene)).collect();
            *slot = TraitStat {
                mean: trait_mean(&values).map(Scalar::to_f64_lossy),
                variance: trait_variance(&values).map(Scalar::to_f64_lossy),
            };
        }
        let (damage, cost) = sanction_energy(&world.accounting);
        Self {
            round: world.round,
            population: world.agents.len() as u64,
            resource: world.resource.to_f64_lossy(),
            traits,
            hypocrite_fraction: hypocrite_fraction(&world.agents),
            sanction_damage: damage.to_f64_lossy(),
            sanction_cost: cost.to_f64_lossy(),
            births: world.accounting.births,
            deaths: world.accounting.deaths,
            total_consumed: world.accounting.consumed.to_f64_lossy(),
        }
    }

    pub fn trait_stat(&self, gene: Gene) -> TraitStat {
        self.traits[gene as usize]
    }

    /// Damage plus cost: the energy lost to sanctioning this round.
    pub fn sanction_energy(&self) -> f64 {
        self.sanction_damage + self.sanction_cost
    }
}

pub fn trait_mean<F: Scalar>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    let n = F::from_usize(values.len())?;
    Some(values.iter().copied().sum::<F>() / n)
}

/// Population variance, dividing by N. `None` for an empty slice.
pub fn trait_variance<F: Scalar>(values: &[F]) -> Option<F> {
    let mean = trait_mean(values)?;
    let n = F::from_usize(values.len())?;
    let ss: F = values.iter().map(|&x| (x - mean) * (x - mean)).sum();
    Some(ss / n)
}

/// Share of agents whose bite size exceeds their own sanction threshold.
pub fn hypocrite_fraction<F: Scalar>(agents: &[Agent<F>]) -> Option<f64> {
    hypocrite_fraction_of(agents.iter().map(|a| &a.genome))
}

pub fn hypocrite_fraction_of<'a, F: Scalar>(
    genomes: impl IntoIterator<Item = &'a Genome<F>>,
) -> Option<f64> {
    let (mut n, mut hyp) = (0usize, 0usize);
    for g in genomes {
        n += 1;
        hyp += usize::from(g.is_hypocrite());
    }
    (n > 0).then(|| hyp as f64 / n as f64)
}

/// `(damage, cost)` totals of a finished round.
pub fn sanction_energy<F: Scalar>(accounting: &RoundAccounting<F>) -> (F, F) {
    (accounting.sanction_damage, accounting.sanction_cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Extinction { round: u64 },
}

/// Everything one run produced. `rounds[0]` is the initial snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunResult<F: Scalar> {
    pub config: SimConfig<F>,
    pub generator: String,
    pub rounds: Vec<RoundMetrics>,
    pub termination: Termination,
}

impl<F: Scalar> RunResult<F> {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn condition(&self) -> Condition {
        self.config.condition
    }

    pub fn operator(&self) -> MutationOperator {
        self.config.mutation_operator
    }

    pub fn rounds_executed(&self) -> u64 {
        self.rounds.len() as u64 - 1
    }

    pub fn final_metrics(&self) -> &RoundMetrics {
        self.rounds
            .last()
            .expect("a run always holds its initial snapshot")
    }

    pub fn final_population(&self) -> u64 {
        self.final_metrics().population
    }

    pub fn went_extinct(&self) -> bool {
        matches!(self.termination, Termination::Extinction { .. })
    }

    /// The last `window` snapshots (fewer if the run is shorter).
    pub fn final_window(&self, window: usize) -> &[RoundMetrics] {
        let start = self.rounds.len().saturating_sub(window);
        &self.rounds[start..]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitConvergence {
    pub gene: String,
    pub initial_variance: Option<f64>,
    pub final_window_variance: Option<f64>,
    pub final_window_mean: Option<f64>,
    /// Largest per-round change of the population mean inside the window.
    pub max_abs_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub window: usize,
    /// Set when the run held fewer than `window` rounds after the initial
    /// snapshot and the report covers the available suffix only.
    pub truncated: bool,
    pub traits: Vec<TraitConvergence>,
}

impl ConvergenceReport {
    pub fn get(&self, gene: Gene) -> &TraitConvergence {
        &self.traits[gene as usize]
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Per-gene convergence summary over the final `window` rounds.
pub fn convergence_report<F: Scalar>(run: &RunResult<F>, window: usize) -> ConvergenceReport {
    let available = run.rounds.len().saturating_sub(1);
    let truncated = available < window;
    let tail = run.final_window(window.max(1));
    let traits = Gene::ALL
        .into_iter()
        .map(|gene| {
            let idx = gene as usize;
            let initial_variance = run.rounds[0].traits[idx].variance;
            let final_window_variance = mean_of(tail.iter().filter_map(|m| m.traits[idx].variance));
            let final_window_mean = mean_of(tail.iter().filter_map(|m| m.traits[idx].mean));
            let max_abs_slope = tail
                .windows(2)
                .filter_map(|pair| {
                    let (a, b) = (&pair[0], &pair[1]);
                    let (ma, mb) = (a.traits[idx].mean?, b.traits[idx].mean?);
                    let dt = b.round.checked_sub(a.round).filter(|&d| d > 0)? as f64;
                    Some(((mb - ma) / dt).abs())
                })
                .fold(None, |acc: Option<f64>, s| {
                    Some(acc.map_or(s, |m| m.max(s)))
                });
            TraitConvergence {
                gene: gene.label().to_string(),
                initial_variance,
                final_window_variance,
                final_window_mean,
                max_abs_slope,
            }
        })
        .collect();
    ConvergenceReport {
        window,
        truncated,
        traits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_hand_values() {
        let v = trait_variance(&[0.2f64, 0.4, 0.6]).unwrap();
        assert!((v - 0.08 / 3.0).abs() < 1e-15);
        assert_eq!(trait_variance(&[0.7f64]), Some(0.0));
        assert_eq!(trait_variance::<f64>(&[]), None);
        assert_eq!(trait_mean::<f32>(&[]), None);
    }

    #[test]
    fn hypocrisy_examples() {
        let a = Genome::deterministic(0.5f64, 0.3, 0.0);
        let b = Genome::deterministic(0.3f64, 0.5, 0.0);
        assert_eq!(hypocrite_fraction_of([&a, &b]), Some(0.5));
        let eq = Genome::deterministic(0.4f64, 0.4, 0.0);
        assert_eq!(hypocrite_fraction_of([&eq, &eq, &eq]), Some(0.0));
        assert_eq!(hypocrite_fraction_of::<f64>([]), None);
    }

    #[test]
    fn sanction_energy_totals() {
        let mut acc = RoundAccounting::<f64>::default();
        assert_eq!(sanction_energy(&acc), (0.0, 0.0));
        acc.sanction_damage += 0.4;
        acc.sanction_cost += 0.1 * 0.4;
        let (d, c) = sanction_energy(&acc);
        assert_eq!(d, 0.4);
        assert!((c - 0.04).abs() < 1e-15);

        let mut acc = RoundAccounting::<f64>::default();
        for _ in 0..7 {
            acc.sanction_damage += 0.25;
            acc.sanction_cost += 0.1 * 0.25;
        }
        let (d, c) = sanction_energy(&acc);
        assert!((d - 7.0 * 0.25).abs() < 1e-12);
        assert!((c - 0.1 * 7.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_world_snapshot_is_absent() {
        let w = World::<f64>::new(10.0, [], 1.0);
        let m = RoundMetrics::capture(&w);
        assert_eq!(m.population, 0);
        assert!(m
            .traits
            .iter()
            .all(|t| t.mean.is_none() && t.variance.is_none()));
        assert_eq!(m.hypocrite_fraction, None);
    }

    fn synthetic(mean_at: impl Fn(u64) -> f64, n: u64) -> RunResult<f64> {
        let rounds = (0..=n)
            .map(|r| {
                let mut traits = [TraitStat {
                    mean: Some(0.5),
                    variance: Some(0.0),
                }; 6];
                traits[0] = TraitStat {
                    mean: Some(mean_at(r)),
                    variance: Some(if r == 0 { 1.0 / 12.0 } else { 0.0 }),
                };
                RoundMetrics {
                    round: r,
                    population: 50,
                    resource: 1000.0,
                    traits,
                    hypocrite_fraction: Some(0.0),
                    sanction_damage: 0.0,
                    sanction_cost: 0.0,
                    births: 0,
                    deaths: 0,
                    total_consumed: 0.0,
                }
            })
            .collect();
        RunResult {
            config: SimConfig::default(),
            generator: String::new(),
            rounds,
            termination: Termination::Completed,
        }
    }

    #[test]
    fn convergence_on_constant_run() {
        let run = synthetic(|_| 0.4, 100);
        let rep = convergence_report(&run, 20);
        let b = rep.get(Gene::BiteSize);
        assert!(!rep.truncated);
        assert_eq!(b.final_window_variance, Some(0.0));
        assert_eq!(b.max_abs_slope, Some(0.0));
        assert!((b.final_window_mean.unwrap() - 0.4).abs() < 1e-12);
        assert!((b.initial_variance.unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn convergence_on_linear_drift() {
        let run = synthetic(|r| 0.2 + 0.001 * r as f64, 200);
        let rep = convergence_report(&run, 50);
        let slope = rep.get(Gene::BiteSize).max_abs_slope.unwrap();
        assert!((slope - 0.001).abs() < 1e-9, "{slope}");
    }

    #[test]
    fn short_run_is_flagged() {
        let run = synthetic(|_| 0.4, 5);
        let rep = convergence_report(&run, 50);
        assert!(rep.truncated);
        assert!((rep.get(Gene::BiteSize).final_window_mean.unwrap() - 0.4).abs() < 1e-12);
    }
}
