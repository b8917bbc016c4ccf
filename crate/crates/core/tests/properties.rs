use normsim::model::draw_effective_behavior;
use normsim::{
    mutate_genome, run_simulation, Behavior, Condition, GeneMask, Genome, MutationOperator,
    MutationParams, RandomStream, SimConfig, World,
};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

fn genome() -> impl Strategy<Value = Genome<f64>> {
    (unit(), unit(), unit(), unit(), unit(), unit()).prop_map(|(b, t, s, bn, tn, sn)| Genome {
        bite_size: b,
        sanction_threshold: t,
        sanction_strength: s,
        bite_noise: bn,
        threshold_noise: tn,
        strength_noise: sn,
    })
}

fn condition() -> impl Strategy<Value = Condition> {
    prop_oneof![
        Just(Condition::Deterministic),
        Just(Condition::Probabilistic)
    ]
}

fn operator() -> impl Strategy<Value = MutationOperator> {
    prop_oneof![
        Just(MutationOperator::Gaussian),
        Just(MutationOperator::LegacySetToOne)
    ]
}

prop_compose! {
    fn small_config()(
        agents in 1usize..40,
        resource in 0.0..300.0f64,
        regrowth in 0.0..60.0f64,
        metabolism in 0.0..1.0f64,
        cost in 0.0..1.0f64,
        window in 0usize..12,
        mutation_probability in 0.0..=1.0f64,
        mutation_variance in 0.0..0.5f64,
        condition in condition(),
        operator in operator(),
        seed in any::<u64>(),
    ) -> SimConfig<f64> {
        SimConfig {
            initial_agents: agents,
            initial_resource: resource,
            regrowth_per_round: regrowth,
            metabolism_per_round: metabolism,
            sanction_cost_factor: cost,
            observation_window: window,
            mutation_probability,
            mutation_variance,
            condition,
            mutation_operator: operator,
            max_rounds: 25,
            seed,
            ..Default::default()
        }
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mutation_keeps_genomes_in_unit_box(
        g in genome(),
        p in 0.0..=1.0f64,
        variance in 0.0..2.0f64,
        op in operator(),
        seed in any::<u64>(),
    ) {
        let params = MutationParams { probability_per_gene: p, variance, operator: op };
        let mut rng = RandomStream::new(seed);
        let mut child = g;
        for _ in 0..20 {
            child = mutate_genome(&child, &params, GeneMask::ALL, &mut rng);
            prop_assert!(child.is_valid(), "{child:?}");
        }
    }

    #[test]
    fn effective_behaviour_stays_in_unit_interval(g in genome(), seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed);
        for b in Behavior::ALL {
            for _ in 0..16 {
                let v = draw_effective_behavior(&g, b, true, &mut rng);
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(draw_effective_behavior(&g, b, false, &mut rng), g.value(b));
        }
    }

    #[test]
    fn resource_and_energy_ledgers_balance(cfg in small_config()) {
        let mut rng = RandomStream::substream(cfg.seed, cfg.stream);
        let mut world = World::init(&cfg, &mut rng).unwrap();
        while world.round < cfg.max_rounds && !world.is_extinct() {
            let (r0, e0, n0) = (world.resource, world.total_energy(), world.population());
            let m = world.step_round(&cfg, &mut rng).unwrap();
            let a = world.accounting;

            let r1 = r0 - a.consumed + cfg.regrowth_per_round;
            prop_assert!(close(world.resource, r1, r0 + cfg.regrowth_per_round),
                "resource {} vs {}", world.resource, r1);
            prop_assert!(world.resource >= 0.0);

            let e1 = e0 + a.consumed - a.metabolism_paid - a.sanction_damage - a.sanction_cost
                - a.removed_energy;
            let scale = e0.abs() + a.consumed + a.metabolism_paid + a.sanction_damage
                + a.sanction_cost + a.removed_energy.abs();
            prop_assert!(close(world.total_energy(), e1, scale),
                "energy {} vs {}", world.total_energy(), e1);

            prop_assert_eq!(world.population() as u64 + a.deaths, n0 as u64 + a.births);
            prop_assert_eq!(m.population, world.population() as u64);
            prop_assert!(close(m.total_consumed, a.consumed, r0));
            prop_assert!(close(a.metabolism_paid, cfg.metabolism_per_round * n0 as f64, 1.0));
            prop_assert!(world.agents.iter().all(|x| x.genome.is_valid()));
            prop_assert!(world.agents.iter().all(|x| x.energy >= cfg.death_threshold));
        }
    }

    #[test]
    fn runs_are_pure_functions_of_config(cfg in small_config()) {
        prop_assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
    }

    #[test]
    fn deterministic_is_probabilistic_without_noise(cfg in small_config()) {
        let det = SimConfig { condition: Condition::Deterministic, ..cfg.clone() };
        let prob = SimConfig {
            condition: Condition::Probabilistic,
            noise_enabled: [false; 3],
            ..cfg
        };
        let (a, b) = (run_simulation(&det).unwrap(), run_simulation(&prob).unwrap());
        prop_assert_eq!(a.rounds, b.rounds);
        prop_assert_eq!(a.termination, b.termination);
    }

    #[test]
    fn f32_runs_stay_in_domain(seed in any::<u64>(), condition in condition()) {
        let cfg = SimConfig::<f32> {
            initial_agents: 20,
            max_rounds: 15,
            seed,
            condition,
            ..Default::default()
        };
        let run = run_simulation(&cfg).unwrap();
        for m in &run.rounds {
            prop_assert!(m.resource >= 0.0);
            for t in m.traits {
                if let Some(mean) = t.mean {
                    prop_assert!((0.0..=1.0).contains(&mean));
                }
            }
        }
    }
}
