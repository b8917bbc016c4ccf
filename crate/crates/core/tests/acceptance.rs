//! Acceptance suite: one verdict line per criterion.
//!
//! Runs without the libtest harness so every line is printed whether or not
//! it passes. Exits non-zero when any gating criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use walkdir::WalkDir;

use normsim::checks::{self, CheckOutcome};
use normsim::io::bundle::write_batch_bundle;
use normsim::io::csv::render_run_csv;
use normsim::model::draw_effective_behavior;
use normsim::{
    mutate_genome, run_batch, run_simulation, Arm, BatchResult, Behavior, Condition,
    ExperimentSpec, GeneMask, Genome, MutationOperator, MutationParams, RandomStream, SimConfig,
    Termination, World,
};

const MASTER_SEED: u64 = 1;
const REPLICATES: u64 = 100;
const ROUNDS: u64 = 500;
const LONG_ROUNDS: u64 = 1000;

const TRACE_TOL: f64 = 1e-12;
const LEDGER_TOL: f64 = 1e-9;
const TRIGGER_RATE_TOL: f64 = 0.003;
const PERMUTATION_TOL: f64 = 0.01;
const CLAMP_MEAN_SE: f64 = 3.0;
const MICRO_N: usize = 100_000;

fn spec(arms: &[Arm], rounds: u64, replicates: u64, parallelism: usize) -> ExperimentSpec<f64> {
    let base = SimConfig {
        max_rounds: rounds,
        ..Default::default()
    };
    let mut s = ExperimentSpec::single(base, replicates, MASTER_SEED);
    s.arms = arms.to_vec();
    s.parallelism = parallelism;
    s
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

fn c1_single_agent_trace() -> CheckOutcome {
    let cfg = SimConfig::<f64> {
        initial_agents: 1,
        mutation_probability: 0.0,
        max_rounds: 1,
        ..Default::default()
    };
    let mut world = World::new(1000.0, [Genome::deterministic(0.5, 0.5, 0.5)], 10.0);
    let mut rng = RandomStream::new(MASTER_SEED);
    world.step_round(&cfg, &mut rng).unwrap();
    // eat 0.5 -> 10.5, metabolism -> 10.49, split in two; resource 1000 - 0.5 + 100
    let energies: Vec<f64> = world.agents.iter().map(|a| a.energy).collect();
    let pre_split: f64 = energies.iter().sum();
    let ok = energies.len() == 2
        && energies.iter().all(|e| (e - 5.245).abs() <= TRACE_TOL)
        && (pre_split - 10.49).abs() <= TRACE_TOL
        && (world.resource - 1099.5).abs() <= TRACE_TOL;
    CheckOutcome::new(
        "C1",
        "exact single-agent trace",
        ok,
        format!(
            "energies {energies:?} (pre-split {pre_split}), resource {} (tol {TRACE_TOL:e})",
            world.resource
        ),
    )
}

fn c2_ledgers() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut rounds = 0;
    for condition in [Condition::Deterministic, Condition::Probabilistic] {
        let cfg = SimConfig::<f64> {
            condition,
            max_rounds: ROUNDS,
            seed: MASTER_SEED,
            ..Default::default()
        };
        let mut rng = RandomStream::substream(cfg.seed, cfg.stream);
        let mut world = World::init(&cfg, &mut rng).unwrap();
        while world.round < cfg.max_rounds && !world.is_extinct() {
            let (r0, e0) = (world.resource, world.total_energy());
            world.step_round(&cfg, &mut rng).unwrap();
            let a = world.accounting;
            let r1 = r0 - a.consumed + cfg.regrowth_per_round;
            let e1 = e0 + a.consumed
                - a.metabolism_paid
                - a.sanction_damage
                - a.sanction_cost
                - a.removed_energy;
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
            worst = worst
                .max(rel(world.resource, r1))
                .max(rel(world.total_energy(), e1));
            rounds += 1;
        }
    }
    CheckOutcome::new(
        "C2",
        "resource and energy ledgers balance",
        worst <= LEDGER_TOL,
        format!("worst relative imbalance {worst:.3e} over {rounds} rounds (tol {LEDGER_TOL:e})"),
    )
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().display().to_string();
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

fn c3_determinism() -> CheckOutcome {
    let arms = [
        Arm::new(Condition::Deterministic, MutationOperator::LegacySetToOne),
        Arm::new(Condition::Probabilistic, MutationOperator::LegacySetToOne),
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for (tag, par) in [("a", 1), ("b", 1), ("c", 8)] {
        let s = spec(&arms, 300, 20, par);
        let batches = run_batch(&s).unwrap();
        let out = tmp.path().join(tag);
        write_batch_bundle(&s, &batches, &out, true).unwrap();
        trees.push(read_tree(&out));
    }
    let files = trees[0].len();
    let ok = files > 0 && trees[0] == trees[1] && trees[0] == trees[2];
    CheckOutcome::new(
        "C3",
        "byte-identical bundles across repeats and thread counts",
        ok,
        format!("{files} files compared: repeat and parallelism 1 vs 8"),
    )
}

fn c4_special_case() -> CheckOutcome {
    let mut compared = 0;
    let mut ok = true;
    for operator in [MutationOperator::Gaussian, MutationOperator::LegacySetToOne] {
        for seed in 0..3 {
            let det = SimConfig::<f64> {
                condition: Condition::Deterministic,
                mutation_operator: operator,
                max_rounds: ROUNDS,
                seed,
                ..Default::default()
            };
            let prob = SimConfig {
                condition: Condition::Probabilistic,
                noise_enabled: [false; 3],
                ..det.clone()
            };
            let (a, b) = (
                run_simulation(&det).unwrap(),
                run_simulation(&prob).unwrap(),
            );
            ok &= a.rounds == b.rounds && a.termination == b.termination;
            compared += a.rounds.len();
        }
    }
    CheckOutcome::new(
        "C4",
        "deterministic equals probabilistic with noise off",
        ok,
        format!("{compared} round snapshots compared over 6 paired runs"),
    )
}

fn c11_operators(
    gauss: &BatchResult<f64>,
    legacy: &BatchResult<f64>,
    legacy_prob: &BatchResult<f64>,
) -> CheckOutcome {
    let complete = |b: &BatchResult<f64>| {
        b.runs.iter().all(|r| match r.termination {
            Termination::Completed => r.rounds_executed() == ROUNDS,
            Termination::Extinction { round } => round <= ROUNDS,
        })
    };
    let label = |b: &BatchResult<f64>| {
        render_run_csv(&b.runs[0])
            .lines()
            .find(|l| l.starts_with("# operator:"))
            .unwrap_or_default()
            .to_string()
    };
    let same_spec = gauss.runs[0].config
        == SimConfig {
            mutation_operator: MutationOperator::Gaussian,
            ..legacy.runs[0].config.clone()
        };
    let distinct = gauss.arm.label() != legacy.arm.label() && label(gauss) != label(legacy);
    let direction = checks::legacy_bite_direction(legacy, legacy_prob);
    CheckOutcome::new(
        "C11",
        "both operators run and are labelled distinctly",
        complete(gauss) && complete(legacy) && same_spec && distinct,
        format!(
            "{} vs {}; informative direction check {}: {}",
            label(gauss),
            label(legacy),
            if direction.passed {
                "holds"
            } else {
                "does not hold"
            },
            direction.detail
        ),
    )
}

fn c12_micro_oracles() -> CheckOutcome {
    // trigger rate: legacy operator from 0.5 marks every triggered gene with 1
    let params = MutationParams {
        probability_per_gene: 0.1,
        variance: 0.1,
        operator: MutationOperator::LegacySetToOne,
    };
    let parent = Genome {
        bite_noise: 0.5,
        threshold_noise: 0.5,
        strength_noise: 0.5,
        ..Genome::deterministic(0.5, 0.5, 0.5)
    };
    let mut rng = RandomStream::new(MASTER_SEED);
    let genomes = MICRO_N / 6;
    let mut triggered = 0usize;
    for _ in 0..genomes {
        let c = mutate_genome(&parent, &params, GeneMask::ALL, &mut rng);
        triggered += normsim::Gene::ALL
            .iter()
            .filter(|&&g| c.get(g) == 1.0)
            .count();
    }
    let rate = triggered as f64 / (genomes * 6) as f64;
    let rate_ok = (rate - 0.1).abs() <= TRIGGER_RATE_TOL;

    // clamped Gaussian expression against Simpson integration
    let (mu, sd) = (0.9, 0.3);
    let g = Genome {
        strength_noise: sd,
        ..Genome::deterministic(0.5, 0.5, mu)
    };
    let xs: Vec<f64> = (0..MICRO_N)
        .map(|_| draw_effective_behavior(&g, Behavior::Strength, true, &mut rng))
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let pdf = |x: f64| {
        (-0.5 * ((x - mu) / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let (a, b, steps) = (mu - 12.0 * sd, mu + 12.0 * sd, 20_000);
    let h = (b - a) / steps as f64;
    let f = |x: f64| x.clamp(0.0, 1.0) * pdf(x);
    let integral = (1..steps).fold(f(a) + f(b), |s, i| {
        s + if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h)
    }) * h
        / 3.0;
    let clamp_ok = (mean - integral).abs() < CLAMP_MEAN_SE * se;

    // shuffle of three items
    let mut counts: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for _ in 0..MICRO_N {
        let mut items = [0u8, 1, 2];
        rng.shuffle(&mut items);
        *counts.entry(items).or_default() += 1;
    }
    let worst = counts
        .values()
        .map(|&c| (c as f64 / MICRO_N as f64 - 1.0 / 6.0).abs())
        .fold(0.0, f64::max);
    let shuffle_ok = counts.len() == 6 && worst <= PERMUTATION_TOL;

    CheckOutcome::new(
        "C12",
        "statistical micro-oracles",
        rate_ok && clamp_ok && shuffle_ok,
        format!(
            "trigger rate {rate:.5} (0.1 +- {TRIGGER_RATE_TOL}); clamped mean {mean:.5} vs integral {integral:.5} ({:.2} se); worst permutation deviation {worst:.5} (tol {PERMUTATION_TOL})",
            (mean - integral).abs() / se
        ),
    )
}

fn arm_of(batches: &[BatchResult<f64>], c: Condition, o: MutationOperator) -> &BatchResult<f64> {
    batches
        .iter()
        .find(|b| b.arm.condition == c && b.arm.operator == o)
        .expect("arm present")
}

fn main() {
    let start = Instant::now();
    let mut outcomes = vec![
        c1_single_agent_trace(),
        c2_ledgers(),
        c3_determinism(),
        c4_special_case(),
    ];

    use Condition::{Deterministic as Det, Probabilistic as Prob};
    use MutationOperator::{Gaussian, LegacySetToOne as Legacy};
    let par = threads();
    let short = run_batch(&spec(
        &[
            Arm::new(Det, Gaussian),
            Arm::new(Det, Legacy),
            Arm::new(Prob, Legacy),
        ],
        ROUNDS,
        REPLICATES,
        par,
    ))
    .expect("batches run");
    let long = run_batch(&spec(
        &[Arm::new(Prob, Gaussian)],
        LONG_ROUNDS,
        REPLICATES,
        par,
    ))
    .expect("long batch runs");

    let det_gauss = arm_of(&short, Det, Gaussian);
    let (det_legacy, prob_legacy) = (arm_of(&short, Det, Legacy), arm_of(&short, Prob, Legacy));
    outcomes.push(checks::variance_reduction(det_gauss));
    outcomes.push(checks::cross_run_dispersion(det_gauss));
    outcomes.push(checks::population_gap(det_legacy, prob_legacy));
    outcomes.push(checks::hypocrisy_gap(det_legacy, prob_legacy));
    outcomes.push(checks::sanction_dynamics(det_legacy, prob_legacy));
    outcomes.push(checks::noise_persistence(&long[0]));
    outcomes.push(c11_operators(det_gauss, det_legacy, prob_legacy));
    outcomes.push(c12_micro_oracles());

    println!();
    println!(
        "acceptance: master seed {MASTER_SEED}, {REPLICATES} replicates per arm, {ROUNDS}/{LONG_ROUNDS} rounds"
    );
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| o.gating && !o.passed)
        .map(|o| o.id.as_str())
        .collect();
    println!(
        "{} of {} criteria pass ({:.1} s)",
        outcomes.len() - failed.len(),
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failing: {}", failed.join(", "));
        std::process::exit(1);
    }
}
