//! Ensemble-level checks of the model's qualitative results.
//!
//! Each check reads finished batches and reports pass/fail with the numbers
//! behind the verdict. Thresholds are constants here so the acceptance
//! suite and the CLI summary agree on them.

use serde::{Deserialize, Serialize};

use crate::experiment::BatchResult;
use crate::metrics::{RoundMetrics, RunResult};
use crate::model::{Condition, Gene, MutationOperator};
use crate::scalar::Scalar;

/// Rounds averaged for "final window" trait statistics.
pub const TRAIT_WINDOW: usize = 50;
/// Rounds averaged for the final sanction-energy window.
pub const SANCTION_WINDOW: usize = 100;
/// Rounds (from round 1) searched for the early sanction peak.
pub const EARLY_ROUNDS: usize = 100;

pub const VARIANCE_RATIO: f64 = 0.5;
pub const VARIANCE_SHARE: f64 = 0.8;
pub const MIN_DISPERSION_SD: f64 = 0.02;
pub const POPULATION_FACTOR: f64 = 10.0;
pub const DET_HYPOCRISY_MAX: f64 = 0.02;
pub const PROB_HYPOCRISY_BAND: [f64; 2] = [0.01, 0.2];
pub const SANCTION_DECAY_RATIO: f64 = 0.25;
pub const SANCTION_DECAY_SHARE: f64 = 0.8;
pub const NOISE_FLOOR: f64 = 0.1;
pub const NOISE_SHARE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub name: String,
    pub passed: bool,
    /// Informative checks are reported but never fail a batch.
    pub gating: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(id: &str, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            passed,
            gating: true,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let verdict = match (self.passed, self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        format!("[{verdict}] {} {}: {}", self.id, self.name, self.detail)
    }
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

fn window_mean(rows: &[RoundMetrics], f: impl Fn(&RoundMetrics) -> Option<f64>) -> Option<f64> {
    mean(rows.iter().filter_map(f))
}

fn trait_mean_at(gene: Gene) -> impl Fn(&RoundMetrics) -> Option<f64> {
    move |m| m.trait_stat(gene).mean
}

/// Mean of the population-mean bite size over the final trait window.
pub fn final_bite_mean<F: Scalar>(run: &RunResult<F>) -> Option<f64> {
    window_mean(
        run.final_window(TRAIT_WINDOW),
        trait_mean_at(Gene::BiteSize),
    )
}

/// Sanction energy (damage plus cost) per agent that acted in the round.
pub fn per_capita_sanction_energy<F: Scalar>(run: &RunResult<F>) -> Vec<f64> {
    run.rounds
        .windows(2)
        .map(|w| w[1].sanction_energy() / w[0].population.max(1) as f64)
        .collect()
}

fn share(flags: impl IntoIterator<Item = bool>) -> (usize, usize) {
    flags
        .into_iter()
        .fold((0, 0), |(k, n), ok| (k + usize::from(ok), n + 1))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "absent".into(), |x| format!("{x:.4}"))
}

/// Bite-size variance over the final window below half of its round-1 value
/// in at least 80% of runs.
pub fn variance_reduction<F: Scalar>(det: &BatchResult<F>) -> CheckOutcome {
    let (k, n) = share(det.runs.iter().map(|r| {
        let start = r
            .rounds
            .get(1)
            .and_then(|m| m.trait_stat(Gene::BiteSize).variance);
        let end = window_mean(r.final_window(TRAIT_WINDOW), |m| {
            m.trait_stat(Gene::BiteSize).variance
        });
        matches!((start, end), (Some(s), Some(e)) if e < VARIANCE_RATIO * s)
    }));
    let frac = k as f64 / n.max(1) as f64;
    CheckOutcome::new(
        "C5",
        "bite-size variance converges",
        n > 0 && frac >= VARIANCE_SHARE,
        format!(
            "{}: {k}/{n} runs end below {VARIANCE_RATIO} x round-1 variance (need >= {VARIANCE_SHARE})",
            det.arm
        ),
    )
}

/// Settled bite sizes differ between runs.
pub fn cross_run_dispersion<F: Scalar>(det: &BatchResult<F>) -> CheckOutcome {
    let finals: Vec<f64> = det.runs.iter().filter_map(final_bite_mean).collect();
    let sd = mean(finals.iter().copied()).map(|m| {
        (finals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / finals.len() as f64).sqrt()
    });
    CheckOutcome::new(
        "C6",
        "settled norm differs across runs",
        sd.is_some_and(|s| s > MIN_DISPERSION_SD),
        format!(
            "{}: sd of final-window mean bite size across {} runs = {} (need > {MIN_DISPERSION_SD})",
            det.arm,
            finals.len(),
            fmt_opt(sd)
        ),
    )
}

fn final_populations<F: Scalar>(b: &BatchResult<F>) -> Vec<f64> {
    b.runs.iter().map(|r| r.final_population() as f64).collect()
}

pub fn population_gap<F: Scalar>(det: &BatchResult<F>, prob: &BatchResult<F>) -> CheckOutcome {
    let d = median(&final_populations(det));
    let p = median(&final_populations(prob));
    let passed = matches!((d, p), (Some(d), Some(p)) if d >= POPULATION_FACTOR * p);
    CheckOutcome::new(
        "C7",
        "deterministic populations dwarf probabilistic ones",
        passed,
        format!(
            "{}: median final population {} vs {} (need >= {POPULATION_FACTOR}x)",
            det.arm.operator,
            fmt_opt(d),
            fmt_opt(p)
        ),
    )
}

fn final_hypocrisy<F: Scalar>(b: &BatchResult<F>) -> Vec<f64> {
    b.runs
        .iter()
        .filter_map(|r| window_mean(r.final_window(TRAIT_WINDOW), |m| m.hypocrite_fraction))
        .collect()
}

pub fn hypocrisy_gap<F: Scalar>(det: &BatchResult<F>, prob: &BatchResult<F>) -> CheckOutcome {
    let (dv, pv) = (final_hypocrisy(det), final_hypocrisy(prob));
    let (d, p) = (median(&dv), median(&pv));
    let [lo, hi] = PROB_HYPOCRISY_BAND;
    let passed = matches!((d, p), (Some(d), Some(p))
        if d < p && d < DET_HYPOCRISY_MAX && (lo..=hi).contains(&p));
    CheckOutcome::new(
        "C8",
        "probabilistic societies are more hypocritical",
        passed,
        format!(
            "{}: median final-window hypocrite fraction det {} vs prob {} (need det < prob, det < {DET_HYPOCRISY_MAX}, prob in [{lo}, {hi}]); cross-run means det {} prob {}",
            det.arm.operator,
            fmt_opt(d),
            fmt_opt(p),
            fmt_opt(mean(dv)),
            fmt_opt(mean(pv)),
        ),
    )
}

fn final_sanction_energy<F: Scalar>(r: &RunResult<F>) -> Option<f64> {
    mean(
        r.final_window(SANCTION_WINDOW)
            .iter()
            .map(RoundMetrics::sanction_energy),
    )
}

/// Sanctioning spikes early and fades in deterministic runs; probabilistic
/// runs keep punishing more.
pub fn sanction_dynamics<F: Scalar>(det: &BatchResult<F>, prob: &BatchResult<F>) -> CheckOutcome {
    let (k, n) = share(det.runs.iter().map(|r| {
        let early_end = (EARLY_ROUNDS + 1).min(r.rounds.len());
        let peak = r.rounds[1.min(early_end)..early_end]
            .iter()
            .map(RoundMetrics::sanction_energy)
            .fold(0.0, f64::max);
        final_sanction_energy(r).is_some_and(|f| peak > 0.0 && f < SANCTION_DECAY_RATIO * peak)
    }));
    let decays = n > 0 && k as f64 / n as f64 >= SANCTION_DECAY_SHARE;

    let d = median(
        &det.runs
            .iter()
            .filter_map(final_sanction_energy)
            .collect::<Vec<_>>(),
    );
    let p = median(
        &prob
            .runs
            .iter()
            .filter_map(final_sanction_energy)
            .collect::<Vec<_>>(),
    );
    let perpetual = matches!((d, p), (Some(d), Some(p)) if p > d);

    let per_capita = |b: &BatchResult<F>| {
        let v: Vec<f64> = b
            .runs
            .iter()
            .filter_map(|r| {
                let pc = per_capita_sanction_energy(r);
                mean(
                    pc[pc.len().saturating_sub(SANCTION_WINDOW)..]
                        .iter()
                        .copied(),
                )
            })
            .collect();
        median(&v)
    };
    CheckOutcome::new(
        "C9",
        "sanctioning fades under determinism, persists under noise",
        decays && perpetual,
        format!(
            "{}: {k}/{n} deterministic runs end below {SANCTION_DECAY_RATIO} x early peak (need >= {SANCTION_DECAY_SHARE}); median final-window sanction energy det {} vs prob {} (need prob > det); per agent det {} vs prob {}",
            det.arm.operator,
            fmt_opt(d),
            fmt_opt(p),
            fmt_opt(per_capita(det)),
            fmt_opt(per_capita(prob)),
        ),
    )
}

/// Population-mean noise genes stay above the floor in most surviving runs.
pub fn noise_persistence<F: Scalar>(prob: &BatchResult<F>) -> CheckOutcome {
    let survivors: Vec<_> = prob.runs.iter().filter(|r| !r.went_extinct()).collect();
    let mut parts = Vec::new();
    let mut passed = !survivors.is_empty();
    for gene in [Gene::BiteNoise, Gene::ThresholdNoise, Gene::StrengthNoise] {
        let (k, n) = share(survivors.iter().map(|r| {
            r.final_metrics()
                .trait_stat(gene)
                .mean
                .is_some_and(|m| m > NOISE_FLOOR)
        }));
        passed &= n > 0 && k as f64 / n as f64 >= NOISE_SHARE;
        parts.push(format!("{} {k}/{n}", gene.label()));
    }
    CheckOutcome::new(
        "C10",
        "noise does not evolve away",
        passed,
        format!(
            "{}: surviving runs with final mean noise > {NOISE_FLOOR}: {} (need >= {NOISE_SHARE} each)",
            prob.arm,
            parts.join(", ")
        ),
    )
}

/// Informative: the legacy operator's probabilistic societies bite at least
/// as hard as deterministic ones.
pub fn legacy_bite_direction<F: Scalar>(
    det: &BatchResult<F>,
    prob: &BatchResult<F>,
) -> CheckOutcome {
    let d = median(
        &det.runs
            .iter()
            .filter_map(final_bite_mean)
            .collect::<Vec<_>>(),
    );
    let p = median(
        &prob
            .runs
            .iter()
            .filter_map(final_bite_mean)
            .collect::<Vec<_>>(),
    );
    let mut out = CheckOutcome::new(
        "C11",
        "legacy operator: probabilistic bite size >= deterministic",
        matches!((d, p), (Some(d), Some(p)) if p >= d),
        format!(
            "{}: median final-window mean bite size det {} vs prob {}",
            det.arm.operator,
            fmt_opt(d),
            fmt_opt(p)
        ),
    );
    out.gating = false;
    out
}

/// Every check that the arms of `batches` make possible.
pub fn evaluate<F: Scalar>(batches: &[BatchResult<F>]) -> Vec<CheckOutcome> {
    let find = |c: Condition, o: MutationOperator| {
        batches
            .iter()
            .find(|b| b.arm.condition == c && b.arm.operator == o && !b.runs.is_empty())
    };
    let mut out = Vec::new();
    for b in batches.iter().filter(|b| !b.runs.is_empty()) {
        match b.arm.condition {
            Condition::Deterministic => {
                out.push(variance_reduction(b));
                out.push(cross_run_dispersion(b));
            }
            Condition::Probabilistic => out.push(noise_persistence(b)),
        }
    }
    for op in [MutationOperator::Gaussian, MutationOperator::LegacySetToOne] {
        if let (Some(d), Some(p)) = (
            find(Condition::Deterministic, op),
            find(Condition::Probabilistic, op),
        ) {
            out.push(population_gap(d, p));
            out.push(hypocrisy_gap(d, p));
            out.push(sanction_dynamics(d, p));
            if op == MutationOperator::LegacySetToOne {
                out.push(legacy_bite_direction(d, p));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0]), Some(3.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[f64::NAN, 1.0, 5.0, 2.0]), Some(2.0));
    }

    #[test]
    fn outcome_lines() {
        let mut c = CheckOutcome::new("C0", "demo", false, "x".into());
        assert!(c.line().starts_with("[FAIL] C0 demo"));
        c.gating = false;
        assert!(c.line().starts_with("[INFO]"));
        c.passed = true;
        assert!(c.line().starts_with("[PASS]"));
    }
}
