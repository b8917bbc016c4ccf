//! Replicate batches, the successful-run filter and cross-run aggregation.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{RoundMetrics, RunResult, VALUE_COLUMNS};
use crate::model::{run_simulation, Condition, MutationOperator, SimConfig};
use crate::scalar::Scalar;

/// One (condition, operator) cell of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arm {
    pub condition: Condition,
    pub operator: MutationOperator,
}

impl Arm {
    pub fn new(condition: Condition, operator: MutationOperator) -> Self {
        Self {
            condition,
            operator,
        }
    }

    /// `"<condition>_<operator>"`, used in file names.
    pub fn label(&self) -> String {
        format!("{}_{}", self.condition, self.operator)
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.condition, self.operator)
    }
}

/// How runs that ended early enter the cross-run mean for later rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtinctPolicy {
    /// Only runs with a snapshot at round r contribute at r.
    #[default]
    AbsentAware,
    /// Extinct runs keep contributing zero population and zero flows;
    /// trait statistics stay absent.
    ExtinctAsZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ExperimentSpec<F: Scalar> {
    pub base: SimConfig<F>,
    pub replicates: u64,
    pub master_seed: u64,
    pub success_population_threshold: u64,
    pub arms: Vec<Arm>,
    pub parallelism: usize,
    pub extinct_policy: ExtinctPolicy,
}

impl<F: Scalar> ExperimentSpec<F> {
    /// Single-arm spec using the base config's own condition and operator.
    pub fn single(base: SimConfig<F>, replicates: u64, master_seed: u64) -> Self {
        let arm = Arm::new(base.condition, base.mutation_operator);
        Self {
            base,
            replicates,
            master_seed,
            success_population_threshold: 1000,
            arms: vec![arm],
            parallelism: 1,
            extinct_policy: ExtinctPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one condition is required".into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidConfig(
                "parallelism must be at least 1".into(),
            ));
        }
        self.base.validate()
    }

    /// Config of replicate `index` in `arm`: the master seed with stream `index`.
    pub fn replicate_config(&self, arm: Arm, index: u64) -> SimConfig<F> {
        SimConfig {
            condition: arm.condition,
            mutation_operator: arm.operator,
            seed: self.master_seed,
            stream: index,
            ..self.base.clone()
        }
    }
}

/// Cross-run mean of every value column at one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRound {
    pub round: u64,
    /// Runs that contributed a snapshot (or a zero, under `ExtinctAsZero`).
    pub runs: u64,
    pub values: [Option<f64>; VALUE_COLUMNS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BatchResult<F: Scalar> {
    pub arm: Arm,
    pub runs: Vec<RunResult<F>>,
    pub mean: Vec<AggregateRound>,
    pub success: Vec<bool>,
    pub success_threshold: u64,
    pub policy: ExtinctPolicy,
    /// Set by `filter_successful` when nothing survived the filter.
    pub empty: bool,
}

impl<F: Scalar> BatchResult<F> {
    pub fn from_runs(
        arm: Arm,
        runs: Vec<RunResult<F>>,
        success_threshold: u64,
        policy: ExtinctPolicy,
    ) -> Self {
        let mean = aggregate(&runs, policy);
        let success = runs
            .iter()
            .map(|r| r.final_population() > success_threshold)
            .collect();
        Self {
            arm,
            empty: runs.is_empty(),
            runs,
            mean,
            success,
            success_threshold,
            policy,
        }
    }
}

// population, sanction damage/cost, births, deaths, consumed
const FLOW_COLUMNS: [usize; 6] = [0, 15, 16, 17, 18, 19];

/// Per-round mean of each column over the runs that have a value there.
pub fn aggregate<F: Scalar>(runs: &[RunResult<F>], policy: ExtinctPolicy) -> Vec<AggregateRound> {
    let series: Vec<_> = runs
        .iter()
        .map(|r| (r.rounds.as_slice(), r.went_extinct()))
        .collect();
    aggregate_rows(&series, policy)
}

/// [`aggregate`] over bare metric series, each paired with whether that
/// run ended in extinction.
pub fn aggregate_rows(
    runs: &[(&[RoundMetrics], bool)],
    policy: ExtinctPolicy,
) -> Vec<AggregateRound> {
    let len = runs.iter().map(|(rows, _)| rows.len()).max().unwrap_or(0);
    let zero_row: [Option<f64>; VALUE_COLUMNS] = {
        let mut z = [None; VALUE_COLUMNS];
        for c in FLOW_COLUMNS {
            z[c] = Some(0.0);
        }
        z
    };
    (0..len)
        .map(|r| {
            let mut sums = [0.0f64; VALUE_COLUMNS];
            let mut counts = [0u64; VALUE_COLUMNS];
            let mut contributing = 0u64;
            for &(rows, extinct) in runs {
                let row = match rows.get(r) {
                    Some(m) => m.values(),
                    None if policy == ExtinctPolicy::ExtinctAsZero && extinct => zero_row,
                    None => continue,
                };
                contributing += 1;
                for (c, v) in row.iter().enumerate() {
                    if let Some(v) = v {
                        sums[c] += v;
                        counts[c] += 1;
                    }
                }
            }
            let mut values = [None; VALUE_COLUMNS];
            for c in 0..VALUE_COLUMNS {
                if counts[c] > 0 {
                    values[c] = Some(sums[c] / counts[c] as f64);
                }
            }
            AggregateRound {
                round: r as u64,
                runs: contributing,
                values,
            }
        })
        .collect()
}

/// Execute every arm of `spec`; one `BatchResult` per arm, in arm order.
///
/// Replicate `i` of every arm uses stream `i` under the master seed, so arms
/// are paired and results do not depend on `parallelism`.
pub fn run_batch<F: Scalar>(spec: &ExperimentSpec<F>) -> Result<Vec<BatchResult<F>>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    spec.arms
        .iter()
        .map(|&arm| {
            let runs = pool.install(|| {
                (0..spec.replicates)
                    .into_par_iter()
                    .map(|i| run_simulation(&spec.replicate_config(arm, i)))
                    .collect::<Result<Vec<_>>>()
            })?;
            Ok(BatchResult::from_runs(
                arm,
                runs,
                spec.success_population_threshold,
                spec.extinct_policy,
            ))
        })
        .collect()
}

/// Runs whose final population is strictly above `threshold`, with the
/// aggregates recomputed. An empty result is flagged, not an error.
pub fn filter_successful<F: Scalar>(batch: &BatchResult<F>, threshold: u64) -> BatchResult<F> {
    let kept = batch
        .runs
        .iter()
        .filter(|r| r.final_population() > threshold)
        .cloned()
        .collect();
    BatchResult::from_runs(batch.arm, kept, threshold, batch.policy)
}

/// Column of the aggregate series, `None` where no run contributed.
pub fn mean_series(mean: &[AggregateRound], column: usize) -> Vec<Option<f64>> {
    mean.iter().map(|a| a.values[column]).collect()
}

/// Convenience for tests and reports: the metrics row of every run at its end.
pub fn final_rows<F: Scalar>(batch: &BatchResult<F>) -> Vec<&RoundMetrics> {
    batch.runs.iter().map(|r| r.final_metrics()).collect()
}
