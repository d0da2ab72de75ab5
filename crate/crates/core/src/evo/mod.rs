//! Energy Valley Optimizer over the unit hypercube.
//!
//! Particles carry a position in `[0,1]^d` and a cost (lower is better).
//! Each iteration ranks the population into stability levels, compares every
//! particle's enrichment with the energy barrier of its neighborhood and emits
//! two offspring through one of three branches:
//!
//! * alpha + gamma decay (unstable, above its stability bound): copy a random
//!   coordinate subset from the best particle and from a neighbor;
//! * beta decay (unstable, below its bound): move along the best particle,
//!   the population center and a neighbor;
//! * random walk (stable): a small uniform jitter.
//!
//! Parents and offspring are merged and the best `pop_size` survive, so the
//! best cost never increases. All random draws happen on the calling thread in
//! particle order before any objective evaluation, which makes a run
//! bit-for-bit reproducible regardless of how many workers evaluate offspring.

pub mod benchmarks;
mod update;

pub use update::{
    alpha_decay_update, beta_decay_update_1, beta_decay_update_2, clip_unit, gamma_decay_update,
    random_walk_update,
};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// Half-width of the random-walk jump box.
pub const RANDOM_WALK_STEP: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EvoError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("objective returned non-finite value {value} for particle {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("objective failed for particle {index}: {source}")]
    Objective {
        index: usize,
        #[source]
        source: BoxError,
    },
    #[error("failed to build evaluation thread pool: {0}")]
    ThreadPool(String),
}

/// Cost function over `[0,1]^d`. Must be safe to call from several threads.
pub trait Objective: Sync {
    fn evaluate(&self, position: &[f64]) -> Result<f64, BoxError>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, position: &[f64]) -> Result<f64, BoxError> {
        Ok(self(position))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvoConfig {
    pub pop_size: usize,
    /// Total objective calls allowed, the initial population included.
    pub max_evaluations: usize,
    pub neighbor_count: usize,
    pub sl_epsilon: f64,
    pub rng_seed: u64,
    /// Stop after this many consecutive iterations without a strict improvement.
    pub stagnation_limit: Option<usize>,
    /// Evaluation threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            pop_size: 30,
            max_evaluations: 3000,
            neighbor_count: 5,
            sl_epsilon: 1e-9,
            rng_seed: 0,
            stagnation_limit: None,
            workers: None,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), EvoError> {
        let bad = |msg: String| Err(EvoError::InvalidConfig(msg));
        if self.pop_size < 2 {
            return bad(format!("pop_size must be >= 2, got {}", self.pop_size));
        }
        if self.max_evaluations < self.pop_size {
            return bad(format!(
                "max_evaluations ({}) must be >= pop_size ({})",
                self.max_evaluations, self.pop_size
            ));
        }
        if self.neighbor_count == 0 || self.neighbor_count >= self.pop_size {
            return bad(format!(
                "neighbor_count must be in [1, pop_size), got {}",
                self.neighbor_count
            ));
        }
        if !(self.sl_epsilon > 0.0 && self.sl_epsilon.is_finite()) {
            return bad(format!(
                "sl_epsilon must be positive, got {}",
                self.sl_epsilon
            ));
        }
        if self.stagnation_limit == Some(0) {
            return bad("stagnation_limit must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub cost: f64,
    /// Neutron enrichment level; equal to the stability level.
    pub enrichment: f64,
    pub stability: f64,
}

impl Particle {
    fn new(position: Vec<f64>, cost: f64) -> Self {
        Self {
            position,
            cost,
            enrichment: 0.0,
            stability: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub particles: Vec<Particle>,
    pub best_index: usize,
    pub worst_index: usize,
    pub evaluations_used: usize,
}

impl Population {
    /// Builds a population from already evaluated particles.
    pub fn from_particles(particles: Vec<Particle>, evaluations_used: usize) -> Self {
        let mut pop = Self {
            particles,
            best_index: 0,
            worst_index: 0,
            evaluations_used,
        };
        pop.refresh_extremes();
        pop
    }

    pub fn best(&self) -> &Particle {
        &self.particles[self.best_index]
    }

    pub fn worst(&self) -> &Particle {
        &self.particles[self.worst_index]
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    fn refresh_extremes(&mut self) {
        let (mut best, mut worst) = (0, 0);
        for (i, p) in self.particles.iter().enumerate() {
            if p.cost < self.particles[best].cost {
                best = i;
            }
            if p.cost > self.particles[worst].cost {
                worst = i;
            }
        }
        self.best_index = best;
        self.worst_index = worst;
    }
}

/// Every random quantity one offspring update may consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDraws {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
    pub alpha_indices: Vec<usize>,
    pub gamma_indices: Vec<usize>,
    pub stability_bound: f64,
    pub jump: Vec<f64>,
    /// Population index of the neighbor used as `X_NG`.
    pub neighbor: usize,
}

impl DecayDraws {
    /// Draws a full set of decay parameters. The draw order is fixed so that a
    /// seed always maps to the same stream of updates.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dim: usize, neighbors: &[usize]) -> Self {
        let tau1 = rng.gen::<f64>();
        let tau2 = rng.gen::<f64>();
        let tau3 = rng.gen::<f64>();
        let tau4 = rng.gen::<f64>();
        let alpha_indices = random_subset(rng, dim);
        let gamma_indices = random_subset(rng, dim);
        let stability_bound = rng.gen::<f64>();
        let jump = (0..dim)
            .map(|_| rng.gen_range(-RANDOM_WALK_STEP..=RANDOM_WALK_STEP))
            .collect();
        let neighbor = neighbors[rng.gen_range(0..neighbors.len())];
        Self {
            tau1,
            tau2,
            tau3,
            tau4,
            alpha_indices,
            gamma_indices,
            stability_bound,
            jump,
            neighbor,
        }
    }
}

/// Subset size uniform in `1..=dim`, members uniform without replacement, sorted.
fn random_subset<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<usize> {
    let size = rng.gen_range(1..=dim);
    let mut picked = index::sample(rng, dim, size).into_vec();
    picked.sort_unstable();
    picked
}

/// Which update rule produced a particle's offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    AlphaGamma,
    Beta,
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    /// Entry 0 is the initial population; one entry per completed iteration after.
    pub best_cost_per_iteration: Vec<f64>,
    /// Cumulative objective calls matching each entry above.
    pub evaluations_per_iteration: Vec<usize>,
    pub best_position_per_iteration: Vec<Vec<f64>>,
    pub final_best: Particle,
    pub iterations_run: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub offspring_evaluated: usize,
    pub improved: bool,
    /// No budget remains for another step.
    pub budget_exhausted: bool,
}

/// Dispatches objective calls, optionally on a dedicated thread pool.
pub struct Evaluator<'o, O: Objective + ?Sized> {
    objective: &'o O,
    pool: Option<rayon::ThreadPool>,
    sequential: bool,
}

impl<'o, O: Objective + ?Sized> Evaluator<'o, O> {
    /// `workers`: `None` uses the global rayon pool, `Some(1)` evaluates on the
    /// calling thread, `Some(n)` builds an `n`-thread pool.
    pub fn new(objective: &'o O, workers: Option<usize>) -> Result<Self, EvoError> {
        let pool = match workers {
            Some(n) if n > 1 => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| EvoError::ThreadPool(e.to_string()))?,
            ),
            _ => None,
        };
        Ok(Self {
            objective,
            pool,
            sequential: workers == Some(1),
        })
    }

    /// Evaluates positions in order; errors carry the offending position index.
    pub fn evaluate_all(&self, positions: &[Vec<f64>]) -> Result<Vec<f64>, EvoError> {
        let results: Vec<Result<f64, BoxError>> = if self.sequential {
            positions
                .iter()
                .map(|p| self.objective.evaluate(p))
                .collect()
        } else {
            let work = || {
                positions
                    .par_iter()
                    .map(|p| self.objective.evaluate(p))
                    .collect()
            };
            match &self.pool {
                Some(pool) => pool.install(work),
                None => work(),
            }
        };
        results
            .into_iter()
            .enumerate()
            .map(|(index, r)| match r {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(value) => Err(EvoError::NonFinite { index, value }),
                Err(source) => Err(EvoError::Objective { index, source }),
            })
            .collect()
    }
}

/// Uniform random population, fully evaluated, with stability levels set.
pub fn initialize_population<O, R>(
    config: &EvoConfig,
    dim: usize,
    evaluator: &Evaluator<'_, O>,
    rng: &mut R,
) -> Result<Population, EvoError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    if dim == 0 {
        return Err(EvoError::InvalidConfig("dimension must be >= 1".into()));
    }
    let positions: Vec<Vec<f64>> = (0..config.pop_size)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let costs = evaluator.evaluate_all(&positions)?;
    let particles = positions
        .into_iter()
        .zip(costs)
        .map(|(p, c)| Particle::new(p, c))
        .collect();
    let mut pop = Population::from_particles(particles, config.pop_size);
    compute_stability_levels(&mut pop, config.sl_epsilon);
    Ok(pop)
}

/// Min-max normalizes costs into stability levels (0 = best, 1 = worst) and
/// sets each particle's enrichment to its stability.
pub fn compute_stability_levels(population: &mut Population, sl_epsilon: f64) {
    if population.is_empty() {
        return;
    }
    population.refresh_extremes();
    let best = population.best().cost;
    let span = (population.worst().cost - best).max(sl_epsilon);
    for p in &mut population.particles {
        let sl = ((p.cost - best) / span).clamp(0.0, 1.0);
        p.stability = sl;
        p.enrichment = sl;
    }
}

/// Coordinate-wise mean of all positions.
pub fn compute_center_point(population: &Population) -> Vec<f64> {
    let n = population.len() as f64;
    let dim = population.particles[0].position.len();
    let mut center = vec![0.0; dim];
    for p in &population.particles {
        for (c, x) in center.iter_mut().zip(&p.position) {
            *c += x;
        }
    }
    center.iter_mut().for_each(|c| *c /= n);
    center
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest other particles by Euclidean distance, nearest first,
/// ties broken by lower index.
pub fn find_neighbors(index: usize, population: &Population, k: usize) -> Vec<usize> {
    let origin = &population.particles[index].position;
    let mut others: Vec<(f64, usize)> = population
        .particles
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != index)
        .map(|(j, p)| (squared_distance(origin, &p.position), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Mean enrichment over the candidate and its neighbors.
pub fn compute_energy_barrier(index: usize, neighbors: &[usize], population: &Population) -> f64 {
    let total: f64 = std::iter::once(index)
        .chain(neighbors.iter().copied())
        .map(|j| population.particles[j].enrichment)
        .sum();
    total / (neighbors.len() + 1) as f64
}

/// Offspring planned for one particle before evaluation.
#[derive(Debug, Clone)]
struct Plan {
    branch: Branch,
    offspring: [Vec<f64>; 2],
}

fn plan_offspring<R: Rng + ?Sized>(
    index: usize,
    population: &Population,
    center: &[f64],
    config: &EvoConfig,
    rng: &mut R,
) -> Plan {
    let particle = &population.particles[index];
    let dim = particle.position.len();
    let best = &population.best().position;
    let neighbors = find_neighbors(index, population, config.neighbor_count);
    let barrier = compute_energy_barrier(index, &neighbors, population);
    let first = DecayDraws::sample(rng, dim, &neighbors);
    let second = DecayDraws::sample(rng, dim, &neighbors);
    let neighbor = &population.particles[first.neighbor].position;

    if particle.enrichment > barrier {
        if particle.stability > first.stability_bound {
            Plan {
                branch: Branch::AlphaGamma,
                offspring: [
                    alpha_decay_update(&particle.position, best, &first),
                    gamma_decay_update(&particle.position, neighbor, &first),
                ],
            }
        } else {
            Plan {
                branch: Branch::Beta,
                offspring: [
                    beta_decay_update_1(
                        &particle.position,
                        best,
                        center,
                        particle.stability,
                        &first,
                        config.sl_epsilon,
                    ),
                    beta_decay_update_2(&particle.position, best, neighbor, &first),
                ],
            }
        }
    } else {
        Plan {
            branch: Branch::RandomWalk,
            offspring: [
                random_walk_update(&particle.position, &first),
                random_walk_update(&particle.position, &second),
            ],
        }
    }
}

/// One iteration: plan two offspring per particle, evaluate those that fit the
/// remaining budget, then keep the best `pop_size` of parents and offspring.
pub fn evo_step<O, R>(
    population: &mut Population,
    config: &EvoConfig,
    evaluator: &Evaluator<'_, O>,
    rng: &mut R,
) -> Result<StepOutcome, EvoError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let remaining = config
        .max_evaluations
        .saturating_sub(population.evaluations_used);
    if remaining == 0 {
        return Ok(StepOutcome {
            offspring_evaluated: 0,
            improved: false,
            budget_exhausted: true,
        });
    }

    compute_stability_levels(population, config.sl_epsilon);
    let center = compute_center_point(population);
    let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(2 * population.len());
    for i in 0..population.len() {
        let plan = plan_offspring(i, population, &center, config, rng);
        log::trace!("particle {i}: {:?}", plan.branch);
        offspring.extend(plan.offspring);
    }
    offspring.truncate(remaining);

    let costs = evaluator.evaluate_all(&offspring)?;
    let evaluated = offspring.len();
    let previous_best = population.best().cost;

    let mut merged = std::mem::take(&mut population.particles);
    merged.extend(
        offspring
            .into_iter()
            .zip(costs)
            .map(|(p, c)| Particle::new(p, c)),
    );
    // stable: equal costs keep parents ahead of offspring, earlier ahead of later
    merged.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    merged.truncate(config.pop_size);
    population.particles = merged;
    population.evaluations_used += evaluated;
    compute_stability_levels(population, config.sl_epsilon);

    Ok(StepOutcome {
        offspring_evaluated: evaluated,
        improved: population.best().cost < previous_best,
        budget_exhausted: population.evaluations_used >= config.max_evaluations,
    })
}

/// Full optimization run from a seeded random population.
pub fn run<O: Objective + ?Sized>(
    config: &EvoConfig,
    dim: usize,
    objective: &O,
) -> Result<RunHistory, EvoError> {
    config.validate()?;
    let evaluator = Evaluator::new(objective, config.workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut population = initialize_population(config, dim, &evaluator, &mut rng)?;

    let mut history = RunHistory {
        best_cost_per_iteration: vec![population.best().cost],
        evaluations_per_iteration: vec![population.evaluations_used],
        best_position_per_iteration: vec![population.best().position.clone()],
        final_best: population.best().clone(),
        iterations_run: 0,
    };
    let mut stagnant = 0usize;

    while population.evaluations_used < config.max_evaluations {
        let outcome = evo_step(&mut population, config, &evaluator, &mut rng)?;
        if outcome.offspring_evaluated == 0 {
            break;
        }
        history.iterations_run += 1;
        history.best_cost_per_iteration.push(population.best().cost);
        history
            .evaluations_per_iteration
            .push(population.evaluations_used);
        history
            .best_position_per_iteration
            .push(population.best().position.clone());

        stagnant = if outcome.improved { 0 } else { stagnant + 1 };
        if config
            .stagnation_limit
            .is_some_and(|limit| stagnant >= limit)
        {
            log::debug!("stopping after {stagnant} stagnant iterations");
            break;
        }
        if outcome.budget_exhausted {
            break;
        }
    }
    history.final_best = population.best().clone();
    Ok(history)
}
