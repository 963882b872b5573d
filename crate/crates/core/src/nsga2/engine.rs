use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::front::{FrontMember, ParetoFront};
use super::hypervolume::{hypervolume_normalized, ReferencePoint};
use super::operators::{bitflip_mutation, polynomial_mutation, uniform_crossover};
use super::sorting::{crowding_distance, fast_nondominated_sort};
use crate::error::{Error, Result};
use crate::fusion::{
    self, BinaryChromosome, Chromosome, Encoding, FusionObjectives, RealChromosome,
    DEFAULT_CUTOFF,
};
use crate::score_data::{DetectorPool, ScoreMatrix};

/// Default reference EER for hypervolume; the parameter coordinate defaults
/// to the whole pool.
pub const DEFAULT_REFERENCE_EER: f64 = 0.20;

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub objectives: FusionObjectives,
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub encoding: Encoding,
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability. `None` resolves to `1 / D` for the
    /// binary encoding and `0.01` for the real one.
    pub mutation_rate: Option<f64>,
    /// Polynomial mutation distribution index (real encoding only).
    pub eta_m: f64,
    /// Weight cut-off `W` (real encoding only).
    pub cutoff: f64,
    /// Minimum hypervolume gain that counts as progress.
    pub epsilon: f64,
    /// Consecutive generations without progress before stopping.
    pub patience: usize,
    pub rng_seed: u64,
    /// `None` resolves to `(0.20, total pool parameters)`.
    pub reference_point: Option<ReferencePoint>,
}

impl RunConfig {
    pub fn new(encoding: Encoding) -> Self {
        let crossover_rate = match encoding {
            Encoding::Binary => 0.7,
            Encoding::Real => 0.5,
        };
        Self {
            encoding,
            population_size: 100,
            max_generations: 1000,
            crossover_rate,
            mutation_rate: None,
            eta_m: 15.0,
            cutoff: DEFAULT_CUTOFF,
            epsilon: 1e-5,
            patience: 30,
            rng_seed: 0,
            reference_point: None,
        }
    }

    pub fn mutation_rate_for(&self, pool: &DetectorPool) -> f64 {
        self.mutation_rate.unwrap_or(match self.encoding {
            Encoding::Binary => 1.0 / pool.len() as f64,
            Encoding::Real => 0.01,
        })
    }

    pub fn reference_for(&self, pool: &DetectorPool) -> ReferencePoint {
        self.reference_point.unwrap_or(ReferencePoint {
            eer: DEFAULT_REFERENCE_EER,
            params: pool.total_params(),
        })
    }

    pub fn validate(&self, pool: &DetectorPool) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        let d = pool.len();
        if self.population_size < d + 1 {
            return err(format!(
                "population_size {} is below the {} seeded individuals (pool size + 1)",
                self.population_size,
                d + 1
            ));
        }
        if self.max_generations == 0 {
            return err("max_generations must be positive".into());
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate_for(pool)),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.eta_m >= 0.0 && self.eta_m.is_finite()) {
            return err(format!("eta_m must be a finite non-negative number, got {}", self.eta_m));
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return err(format!("cutoff must lie in (0, 1), got {}", self.cutoff));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return err(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if self.patience == 0 {
            return err("patience must be positive".into());
        }
        let r = self.reference_for(pool);
        if !(r.eer > 0.0 && r.eer.is_finite()) || r.params == 0 {
            return err(format!("reference point must be positive, got {r:?}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Configuration as run, with defaults that depend on the pool resolved.
    pub config: RunConfig,
    pub front: ParetoFront,
    pub hv_trace: Vec<f64>,
    pub generations_run: usize,
    /// Distinct chromosomes whose objectives were computed.
    pub evaluations: usize,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn hv_csv(&self) -> String {
        let mut out = String::from("generation,hypervolume\n");
        for (g, hv) in self.hv_trace.iter().enumerate() {
            out.push_str(&format!("{g},{hv}\n"));
        }
        out
    }
}

/// Independent random streams derived from one root seed.
struct Streams {
    seeding: ChaCha8Rng,
    selection: ChaCha8Rng,
    crossover: ChaCha8Rng,
    mutation: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Self {
            seeding: stream(1),
            selection: stream(2),
            crossover: stream(3),
            mutation: stream(4),
        }
    }
}

/// Initial population: the all-detector fusion, one single-detector fusion
/// per detector, then random chromosomes up to the population size.
pub fn seed_population<R: Rng + ?Sized>(
    pool: &DetectorPool,
    config: &RunConfig,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    let d = pool.len();
    let n = config.population_size;
    if n < d + 1 {
        return Err(Error::Config(format!(
            "population_size {n} cannot hold {} seeded individuals",
            d + 1
        )));
    }
    let mut pop = Vec::with_capacity(n);
    match config.encoding {
        Encoding::Binary => {
            pop.push(Chromosome::Binary(BinaryChromosome::all_ones(d)));
            pop.extend((0..d).map(|k| Chromosome::Binary(BinaryChromosome::one_hot(d, k))));
            while pop.len() < n {
                let mut c = BinaryChromosome::new((0..d).map(|_| rng.random_bool(0.5)).collect());
                c.repair(rng);
                pop.push(Chromosome::Binary(c));
            }
        }
        Encoding::Real => {
            let uniform = (1.0 / d as f64).max(config.cutoff);
            pop.push(Chromosome::Real(RealChromosome::new(vec![uniform; d])));
            pop.extend((0..d).map(|k| Chromosome::Real(RealChromosome::one_hot(d, k))));
            while pop.len() < n {
                let mut c = RealChromosome::new((0..d).map(|_| rng.random::<f64>()).collect());
                c.repair(config.cutoff);
                pop.push(Chromosome::Real(c));
            }
        }
    }
    Ok(pop)
}

/// Binary tournament: two distinct uniform draws, lower rank wins, then
/// larger crowding distance, then the first draw.
pub fn tournament_select<'a, R: Rng + ?Sized>(
    population: &'a [Individual],
    rng: &mut R,
) -> &'a Individual {
    let n = population.len();
    if n == 1 {
        return &population[0];
    }
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let (a, b) = (&population[i], &population[j]);
    if b.rank < a.rank || (b.rank == a.rank && b.crowding > a.crowding) {
        b
    } else {
        a
    }
}

/// Assigns rank and crowding over `pool` and truncates it to `n`: whole
/// fronts in rank order, the boundary front by decreasing crowding distance.
pub fn survivor_selection(pool: Vec<Individual>, n: usize) -> Vec<Individual> {
    let points: Vec<[f64; 2]> = pool.iter().map(|i| i.objectives.as_point()).collect();
    let fronts = fast_nondominated_sort(&points);
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(n);
    for (rank, front) in fronts.iter().enumerate() {
        if out.len() >= n {
            break;
        }
        let front_points: Vec<[f64; 2]> = front.iter().map(|&i| points[i]).collect();
        let crowd = crowding_distance(&front_points);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if out.len() + front.len() > n {
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]));
            order.truncate(n - out.len());
        }
        for k in order {
            let mut ind = slots[front[k]].take().expect("each index appears once");
            ind.rank = rank;
            ind.crowding = crowd[k];
            out.push(ind);
        }
    }
    out
}

/// Memoized objective evaluation, parallel over distinct chromosomes.
struct Evaluator<'a> {
    matrix: &'a ScoreMatrix,
    cutoff: f64,
    cache: HashMap<Vec<u64>, FusionObjectives>,
}

impl<'a> Evaluator<'a> {
    fn evaluate(&mut self, chroms: &[Chromosome]) -> Result<Vec<FusionObjectives>> {
        let keys: Vec<Vec<u64>> = chroms.iter().map(Chromosome::key).collect();
        let mut pending: Vec<(usize, &Vec<u64>)> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (i, k) in keys.iter().enumerate() {
            if !self.cache.contains_key(k) && queued.insert(k) {
                pending.push((i, k));
            }
        }
        let (matrix, cutoff) = (self.matrix, self.cutoff);
        let fresh: Vec<FusionObjectives> = pending
            .par_iter()
            .map(|&(i, _)| fusion::evaluate(&chroms[i], matrix, cutoff))
            .collect::<Result<_>>()?;
        for ((_, k), obj) in pending.iter().zip(fresh) {
            self.cache.insert((*k).clone(), obj);
        }
        Ok(keys.iter().map(|k| self.cache[k]).collect())
    }
}

fn front_hv(pop: &[Individual], reference: ReferencePoint) -> f64 {
    let pts: Vec<[f64; 2]> = pop
        .iter()
        .filter(|i| i.rank == 0)
        .map(|i| reference.normalize(&i.objectives))
        .collect();
    hypervolume_normalized(&pts)
}

fn make_offspring(
    pop: &[Individual],
    config: &RunConfig,
    streams: &mut Streams,
) -> Result<Vec<Chromosome>> {
    let n = config.population_size;
    let pairs = n.div_ceil(2);
    let winners: Vec<&Individual> = (0..2 * pairs)
        .map(|_| tournament_select(pop, &mut streams.selection))
        .collect();
    let mut children = Vec::with_capacity(2 * pairs);
    for pair in winners.chunks_exact(2) {
        let (c1, c2) = uniform_crossover(
            &pair[0].chromosome,
            &pair[1].chromosome,
            config.crossover_rate,
            &mut streams.crossover,
        )?;
        for c in [c1, c2] {
            children.push(mutate(c, config, &mut streams.mutation));
        }
    }
    children.truncate(n);
    Ok(children)
}

fn mutate(c: Chromosome, config: &RunConfig, rng: &mut ChaCha8Rng) -> Chromosome {
    let p_m = config.mutation_rate.expect("mutation rate resolved before evolving");
    match c {
        Chromosome::Binary(b) => Chromosome::Binary(bitflip_mutation(&b, p_m, rng)),
        Chromosome::Real(r) => Chromosome::Real(polynomial_mutation(
            &r,
            p_m,
            config.eta_m,
            config.cutoff,
            rng,
        )),
    }
}

/// Runs NSGA-II on the current rayon pool.
pub fn evolve(matrix: &ScoreMatrix, config: &RunConfig) -> Result<RunReport> {
    evolve_observed(matrix, config, |_, _| {})
}

/// Runs NSGA-II with objective evaluation spread over `workers` threads
/// (all available cores when `None`). The result does not depend on the
/// number of workers.
pub fn evolve_with_workers(
    matrix: &ScoreMatrix,
    config: &RunConfig,
    workers: Option<usize>,
) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| evolve(matrix, config))
}

/// Like [`evolve`], calling `observe(generation, population)` after every
/// generation's survivor selection (generation 0 is the seeded population).
pub fn evolve_observed<F>(matrix: &ScoreMatrix, config: &RunConfig, mut observe: F) -> Result<RunReport>
where
    F: FnMut(usize, &[Individual]),
{
    let started = Instant::now();
    let pool = matrix.pool();
    config.validate(pool)?;
    let reference = config.reference_for(pool);
    let config = &RunConfig {
        reference_point: Some(reference),
        mutation_rate: Some(config.mutation_rate_for(pool)),
        ..config.clone()
    };
    let n = config.population_size;

    let mut streams = Streams::new(config.rng_seed);
    let mut evaluator = Evaluator {
        matrix,
        cutoff: config.cutoff,
        cache: HashMap::new(),
    };

    let seeds = seed_population(pool, config, &mut streams.seeding)?;
    let objectives = evaluator.evaluate(&seeds)?;
    let initial: Vec<Individual> = seeds
        .into_iter()
        .zip(objectives)
        .map(|(chromosome, objectives)| Individual {
            chromosome,
            objectives,
            rank: 0,
            crowding: 0.0,
        })
        .collect();
    let mut population = survivor_selection(initial, n);
    observe(0, &population);

    let mut hv_trace = vec![front_hv(&population, reference)];
    let mut stagnant = 0;
    for generation in 1..config.max_generations {
        let children = make_offspring(&population, config, &mut streams)?;
        let objectives = evaluator.evaluate(&children)?;
        let mut combined = population;
        combined.extend(children.into_iter().zip(objectives).map(|(chromosome, objectives)| {
            Individual {
                chromosome,
                objectives,
                rank: 0,
                crowding: 0.0,
            }
        }));
        population = survivor_selection(combined, n);
        observe(generation, &population);

        let hv = front_hv(&population, reference);
        let previous = *hv_trace.last().expect("trace starts non-empty");
        hv_trace.push(hv);
        if hv - previous < config.epsilon {
            stagnant += 1;
            if stagnant >= config.patience {
                break;
            }
        } else {
            stagnant = 0;
        }
    }

    let front = ParetoFront::from_candidates(population.iter().filter(|i| i.rank == 0).map(|i| {
        FrontMember {
            objectives: i.objectives,
            chromosome: i.chromosome.clone(),
        }
    }));
    log::debug!(
        "run seed {} finished after {} generations, {} evaluations",
        config.rng_seed,
        hv_trace.len(),
        evaluator.cache.len()
    );
    Ok(RunReport {
        config: config.clone(),
        front,
        generations_run: hv_trace.len(),
        hv_trace,
        evaluations: evaluator.cache.len(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
