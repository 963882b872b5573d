use std::time::Instant;

use evofuse::fusion::{evaluate, BinaryChromosome, Chromosome, FusionObjectives, DEFAULT_CUTOFF};
use evofuse::metrics;
use evofuse::nsga2::{
    evolve, evolve_observed, seed_population, super_pareto, survivor_selection, FrontMember,
    Individual, ParetoFront,
};
use evofuse::score_data::{DetectorPool, Label, ScoreMatrix, TrialLabels};
use evofuse::synthgen::{generate, SynthScenario};
use evofuse::{Encoding, RunConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(bona: usize, spoof: usize) -> TrialLabels {
    TrialLabels::new(
        (0..bona + spoof)
            .map(|j| {
                let l = if j < bona { Label::Bonafide } else { Label::Spoof };
                (format!("t{j}"), l)
            })
            .collect(),
    )
    .unwrap()
}

fn individual(eer: f64, params: u64) -> Individual {
    Individual {
        chromosome: Chromosome::Binary(BinaryChromosome::all_ones(1)),
        objectives: FusionObjectives { eer, params },
        rank: 0,
        crowding: 0.0,
    }
}

#[test]
fn identical_detectors_collapse_to_the_cheapest() {
    let scores: Vec<f64> = (0..30).map(|j| ((j * 5) % 13) as f64 + if j < 15 { 4.0 } else { 0.0 }).collect();
    let pool = DetectorPool::new((0..5u64).map(|i| (format!("d{i}"), 50 - 10 * i, "x"))).unwrap();
    let m = ScoreMatrix::new(pool, labels(15, 15), vec![scores.clone(); 5]).unwrap();
    let single = metrics::eer(&scores, m.labels()).unwrap();
    for encoding in [Encoding::Binary, Encoding::Real] {
        let mut c = RunConfig::new(encoding);
        c.population_size = 12;
        let report = evolve(&m, &c).unwrap();
        assert_eq!(report.front.len(), 1);
        let best = report.front.members()[0].objectives;
        assert_eq!(best.eer, single);
        assert_eq!(best.params, 10);
    }
}

#[test]
fn one_hot_seeds_match_individual_detectors() {
    let (m, _) = generate(&SynthScenario::sep(2)).unwrap();
    let mut c = RunConfig::new(Encoding::Real);
    c.population_size = 4 + 1;
    let seeds = seed_population(m.pool(), &c, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(seeds.len(), 5);
    for k in 0..4 {
        let o = evaluate(&seeds[k + 1], &m, DEFAULT_CUTOFF).unwrap();
        assert_eq!(o.eer, metrics::eer(m.row(k), m.labels()).unwrap());
        assert_eq!(o.params, m.pool().param_counts()[k]);
    }
}

#[test]
fn evolved_fronts_cover_every_singleton() {
    let (m, _) = generate(&SynthScenario::s1(31)).unwrap();
    let singles: Vec<FusionObjectives> = (0..m.n_detectors())
        .map(|k| {
            let c = Chromosome::Binary(BinaryChromosome::one_hot(m.n_detectors(), k));
            evaluate(&c, &m, DEFAULT_CUTOFF).unwrap()
        })
        .collect();
    for seed in 0..10 {
        let mut c = RunConfig::new(Encoding::Binary);
        c.rng_seed = seed;
        let report = evolve(&m, &c).unwrap();
        for s in &singles {
            assert!(report.front.weakly_dominates(s), "seed {seed}: {s:?}");
        }
    }
}

#[test]
fn same_config_same_report() {
    let (m, _) = generate(&SynthScenario::s1(4)).unwrap();
    let mut c = RunConfig::new(Encoding::Real);
    c.rng_seed = 17;
    c.max_generations = 40;
    let a = evolve(&m, &c).unwrap();
    let b = evolve(&m, &c).unwrap();
    assert_eq!(a.front, b.front);
    assert_eq!(a.hv_trace, b.hv_trace);
    assert_eq!(a.evaluations, b.evaluations);
}

#[test]
fn single_generation_budget() {
    let (m, _) = generate(&SynthScenario::sep(5)).unwrap();
    let mut c = RunConfig::new(Encoding::Binary);
    c.max_generations = 1;
    let r = evolve(&m, &c).unwrap();
    assert_eq!(r.generations_run, 1);
    assert_eq!(r.hv_trace.len(), 1);
}

#[test]
fn populations_stay_feasible_and_sized() {
    let (m, _) = generate(&SynthScenario::s1(8)).unwrap();
    let mut c = RunConfig::new(Encoding::Real);
    c.max_generations = 30;
    c.mutation_rate = Some(0.2);
    let mut generations = 0;
    evolve_observed(&m, &c, |_, pop| {
        generations += 1;
        assert_eq!(pop.len(), c.population_size);
        assert!(pop.iter().all(|i| i.chromosome.is_feasible(c.cutoff)));
    })
    .unwrap();
    assert!(generations > 1);
}

#[test]
fn super_front_matches_brute_force_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fronts: Vec<ParetoFront> = (0..10)
        .map(|_| {
            ParetoFront::from_candidates((0..rng.random_range(1..12)).map(|_| FrontMember {
                objectives: FusionObjectives {
                    eer: f64::from(rng.random_range(0..20u32)) / 100.0,
                    params: rng.random_range(1..20),
                },
                chromosome: Chromosome::Binary(BinaryChromosome::all_ones(2)),
            }))
        })
        .collect();
    let union: Vec<FusionObjectives> = fronts.iter().flat_map(|f| f.objectives()).collect();
    let mut expected: Vec<(f64, u64)> = union
        .iter()
        .filter(|p| {
            !union.iter().any(|q| {
                q.eer <= p.eer && q.params <= p.params && (q.eer < p.eer || q.params < p.params)
            })
        })
        .map(|p| (p.eer, p.params))
        .collect();
    expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    expected.dedup();
    let got: Vec<(f64, u64)> = super_pareto(&fronts)
        .unwrap()
        .objectives()
        .iter()
        .map(|o| (o.eer, o.params))
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn bookkeeping_for_a_thousand_individuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pool: Vec<Individual> = (0..2000)
        .map(|_| individual(rng.random_range(0.0..0.5), rng.random_range(1..1_000_000)))
        .collect();
    let started = Instant::now();
    let survivors = survivor_selection(pool, 1000);
    let elapsed = started.elapsed();
    assert_eq!(survivors.len(), 1000);
    assert!(elapsed.as_millis() < 100, "{elapsed:?}");
}

proptest! {
    #[test]
    fn survivors_keep_the_whole_first_front(
        raw in prop::collection::vec((0u32..30, 1u64..30), 2..120),
        keep_frac in 0.3f64..1.0,
    ) {
        let pool: Vec<Individual> =
            raw.iter().map(|&(e, p)| individual(f64::from(e) / 100.0, p)).collect();
        let first: Vec<FusionObjectives> = pool
            .iter()
            .map(|i| i.objectives)
            .filter(|o| !pool.iter().any(|q| q.objectives.dominates(o)))
            .collect();
        let n = ((pool.len() as f64 * keep_frac) as usize).max(1);
        let survivors = survivor_selection(pool, n);
        prop_assert_eq!(survivors.len(), n);
        if first.len() <= n {
            let mut kept: Vec<_> = survivors
                .iter()
                .filter(|i| i.rank == 0)
                .map(|i| (i.objectives.eer.to_bits(), i.objectives.params))
                .collect();
            let mut want: Vec<_> = first.iter().map(|o| (o.eer.to_bits(), o.params)).collect();
            kept.sort();
            want.sort();
            prop_assert_eq!(kept, want);
        }
    }
}
