//! The generation loop: local search, tournament selection, intermarriage
//! exploration, union with the offspring, and sector-keyed truncation.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{deb_sort, FitnessKey};
use crate::error::{Error, Result};
use crate::local_search::{local_search, refine_lower};
use crate::problem::{sample_uniform, BilevelProblem, Candidate, Evaluator};
use crate::seed;
use crate::strategy::{strategy_for_sector, Profile, SectorSchedule, Strategy, StrategyKind, DEFAULT_TIE_EPSILON};
use crate::variation::{crossover_pair, mutate, tournament_indices, CrossoverParams};

/// Number of population members recorded per generation.
pub const TRACE_WIDTH: usize = 5;

/// Optional early termination against a known optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub best_known_upper: f64,
    pub best_known_lower: f64,
    pub tolerance: f64,
    /// Consecutive generations the tolerance must hold.
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover: CrossoverParams,
    pub beta: f64,
    pub blmutation_rate: f64,
    /// Probability that an offspring is perturbed after crossover.
    pub mutation_rate: f64,
    /// Clones spent refining each offspring's `x_l` in `F`-ranked sectors.
    pub polish_budget: usize,
    pub delta_eq: f64,
    pub tournament_size: usize,
    pub tie_epsilon: f64,
    pub profile: Profile,
    pub sector_overrides: [Option<StrategyKind>; 4],
    pub master_seed: u64,
    pub early_stop: Option<EarlyStop>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 500,
            crossover: CrossoverParams::default(),
            beta: 0.5,
            blmutation_rate: 1.0,
            mutation_rate: 1.0,
            polish_budget: 40,
            delta_eq: 1e-4,
            tournament_size: 2,
            tie_epsilon: DEFAULT_TIE_EPSILON,
            profile: Profile::Optimistic,
            sector_overrides: [None; 4],
            master_seed: 0,
            early_stop: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.population_size == 0 {
            return bad("population size must be at least 1".into());
        }
        self.crossover.validate()?;
        if !(self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(0.0..=1.0).contains(&self.blmutation_rate) {
            return bad(format!("blmutation rate must lie in [0, 1], got {}", self.blmutation_rate));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation rate must lie in [0, 1], got {}", self.mutation_rate));
        }
        if !(self.delta_eq > 0.0) {
            return bad(format!("delta_eq must be positive, got {}", self.delta_eq));
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be at least 1".into());
        }
        if !(self.tie_epsilon >= 0.0 && self.tie_epsilon.is_finite()) {
            return bad(format!("tie epsilon must be finite and >= 0, got {}", self.tie_epsilon));
        }
        Ok(())
    }

    pub fn schedule(&self) -> SectorSchedule {
        SectorSchedule {
            generations: self.generations,
            profile: self.profile,
            overrides: self.sector_overrides,
        }
    }
}

/// One line of the per-generation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub sector: usize,
    pub strategy: StrategyKind,
    /// `(F, f, e)` of the leading members after truncation.
    pub best: Vec<(f64, f64, f64)>,
    pub evaluations: u64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Candidate,
    pub best_per_generation: Vec<GenerationRecord>,
    pub evaluation_count: u64,
    pub wall_time: Duration,
}

impl RunResult {
    /// Leading `(F, f)` at the end of `generation`, if it was reached.
    pub fn best_at(&self, generation: usize) -> Option<(f64, f64)> {
        self.best_per_generation
            .iter()
            .find(|r| r.generation == generation)
            .and_then(|r| r.best.first())
            .map(|(u, l, _)| (*u, *l))
    }
}

pub fn initialize(problem: &BilevelProblem, config: &RunConfig, eval: &Evaluator<'_>) -> Result<Vec<Candidate>> {
    let mut rng = seed::stream(config.master_seed, &[seed::TAG_INIT]);
    (0..config.population_size)
        .map(|_| {
            let x_u = sample_uniform(&problem.upper_bounds, &mut rng);
            let x_l = sample_uniform(&problem.lower_bounds, &mut rng);
            eval.candidate(x_u, x_l)
        })
        .collect()
}

/// Stable Deb sort under `key`, truncated to `capacity`.
pub fn sort_and_discard_by(mut population: Vec<Candidate>, key: FitnessKey, capacity: usize) -> Vec<Candidate> {
    deb_sort(&mut population, key);
    population.truncate(capacity);
    population
}

/// Lower-level refinement of fresh offspring before they enter the union.
///
/// Ranking the union by `F` favours offspring whose `x_l` lags behind the
/// follower's optimum, so those are refined before they compete.

fn polish_offspring(
    offspring: Vec<Candidate>,
    generation: usize,
    config: &RunConfig,
    schedule: &SectorSchedule,
    eval: &Evaluator<'_>,
) -> Result<Vec<Candidate>> {
    if config.polish_budget == 0 {
        return Ok(offspring);
    }
    let strategy = Strategy {
        kind: schedule.local_search_strategy(generation)?,
        tie_epsilon: config.tie_epsilon,
    };
    offspring
        .into_iter()
        .enumerate()
        .map(|(idx, o)| {
            if !o.is_feasible() {
                return Ok(o);
            }
            let mut rng = seed::stream(config.master_seed, &[seed::TAG_OFFSPRING_SEARCH, generation as u64, idx as u64]);
            refine_lower(&o, config.polish_budget, &strategy, config, eval, &mut rng)
        })
        .collect()
}

/// Union survivor step: exact repeats of a genome are discarded first and
/// only re-admitted when there are fewer than `capacity` distinct members.
pub fn merge_and_discard(population: Vec<Candidate>, key: FitnessKey, capacity: usize) -> Vec<Candidate> {
    let mut seen = HashSet::with_capacity(population.len());
    let (unique, repeats): (Vec<_>, Vec<_>) = population.into_iter().partition(|c| {
        let genome: Vec<u64> = c.x_u.iter().chain(&c.x_l).map(|v| v.to_bits()).collect();
        seen.insert(genome)
    });
    let mut kept = sort_and_discard_by(unique, key, capacity);
    if kept.len() < capacity {
        let missing = capacity - kept.len();
        kept.extend(sort_and_discard_by(repeats, key, missing));
    }
    kept
}

/// Sorts by `F` in S1/S2 and by `f` in S3/S4, keeping `capacity` members.
pub fn sort_and_discard(
    population: Vec<Candidate>,
    generation: usize,
    capacity: usize,
    schedule: &SectorSchedule,
) -> Result<Vec<Candidate>> {
    if capacity == 0 {
        return Err(Error::InvalidInput("capacity must be at least 1".into()));
    }
    Ok(sort_and_discard_by(population, schedule.sort_key(generation)?, capacity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Continue,
    Stop,
}

/// Progress the termination check looks at.
#[derive(Debug, Clone, Default)]
pub struct TerminationState {
    pub generation: usize,
    /// Consecutive generations within the early-stop tolerance.
    pub streak: usize,
}

impl TerminationState {
    pub fn observe(&mut self, generation: usize, best: (f64, f64), config: &RunConfig) {
        self.generation = generation;
        match config.early_stop {
            Some(es)
                if (best.0 - es.best_known_upper).abs() <= es.tolerance
                    && (best.1 - es.best_known_lower).abs() <= es.tolerance =>
            {
                self.streak += 1
            }
            _ => self.streak = 0,
        }
    }
}

pub fn check_termination(state: &TerminationState, config: &RunConfig) -> Termination {
    if state.generation >= config.generations {
        return Termination::Stop;
    }
    match config.early_stop {
        Some(es) if state.streak >= es.patience.max(1) => Termination::Stop,
        _ => Termination::Continue,
    }
}

fn record(population: &[Candidate], generation: usize, sector: usize, strategy: StrategyKind, evaluations: u64) -> GenerationRecord {
    GenerationRecord {
        generation,
        sector,
        strategy,
        best: population
            .iter()
            .take(TRACE_WIDTH)
            .map(|c| (c.upper_fitness, c.lower_fitness, c.total_error()))
            .collect(),
        evaluations,
    }
}

/// Runs the full generation loop. Reproducible from `config.master_seed`.
pub fn run(problem: &BilevelProblem, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let started = Instant::now();
    let eval = Evaluator::new(problem, config.delta_eq)?;
    let schedule = config.schedule();
    let n = config.population_size;

    let mut population = initialize(problem, config, &eval)?;
    deb_sort(&mut population, FitnessKey::Upper);

    let mut trace = Vec::with_capacity(config.generations);
    let mut state = TerminationState::default();

    for generation in 1..=config.generations {
        let key = schedule.sort_key(generation)?;
        let sector = schedule.sector(generation)?;

        population = local_search(&population, generation, config, &schedule, &eval)?;

        let g = generation as u64;
        let mut sel_rng = seed::stream(config.master_seed, &[seed::TAG_SELECTION, g]);
        let parents = tournament_indices(&population, n, config.tournament_size, key, &mut sel_rng)?;

        let mut x_rng = seed::stream(config.master_seed, &[seed::TAG_CROSSOVER, g]);
        let mut offspring = Vec::with_capacity(parents.len());
        for pair in parents.chunks(2) {
            match *pair {
                [a, b] => {
                    let (o1, o2) = crossover_pair(&population[a], &population[b], &config.crossover, &eval, &mut x_rng)?;
                    offspring.push(o1);
                    offspring.push(o2);
                }
                [a] => offspring.push(population[a].clone()),
                _ => unreachable!(),
            }
        }
        let mut m_rng = seed::stream(config.master_seed, &[seed::TAG_MUTATION, g]);
        for o in offspring.iter_mut().filter(|_| key == FitnessKey::Upper) {
            if m_rng.gen::<f64>() < config.mutation_rate {
                *o = mutate(o, &eval, &mut m_rng)?;
            }
        }
        let offspring = if key == FitnessKey::Upper {
            polish_offspring(offspring, generation, config, &schedule, &eval)?
        } else {
            offspring
        };
        population.extend(offspring);
        population = merge_and_discard(population, key, n);

        trace.push(record(
            &population,
            generation,
            sector,
            strategy_for_sector(generation, &schedule)?,
            eval.count(),
        ));

        let lead = &population[0];
        state.observe(generation, (lead.upper_fitness, lead.lower_fitness), config);
        if check_termination(&state, config) == Termination::Stop {
            break;
        }
    }

    Ok(RunResult {
        best: population[0].clone(),
        best_per_generation: trace,
        evaluation_count: eval.count(),
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_search::clone_count;
    use crate::problem::Bounds;

    fn sq1() -> BilevelProblem {
        BilevelProblem::builder(
            "SQ1",
            1,
            1,
            |u, l| (u[0] - 1.0).powi(2) + l[0].powi(2),
            |u, l| (l[0] - u[0]).powi(2),
        )
        .upper_bounds(Bounds::uniform(1, -5.0, 5.0).unwrap())
        .lower_bounds(Bounds::uniform(1, -5.0, 5.0).unwrap())
        .build()
        .unwrap()
    }

    fn feasible(upper: f64, lower: f64) -> Candidate {
        Candidate {
            x_u: vec![],
            x_l: vec![],
            upper_fitness: upper,
            lower_fitness: lower,
            upper_violations: vec![],
            lower_violations: vec![],
            satisfied_upper: 0,
            satisfied_lower: 0,
            error_upper: 0.0,
            error_lower: 0.0,
        }
    }

    #[test]
    fn initialization() {
        let p = sq1();
        let ev = Evaluator::new(&p, 1e-4).unwrap();
        let one = RunConfig { population_size: 1, ..Default::default() };
        assert_eq!(initialize(&p, &one, &ev).unwrap().len(), 1);
        let cfg = RunConfig { master_seed: 3, ..Default::default() };
        let a = initialize(&p, &cfg, &ev).unwrap();
        let b = initialize(&p, &cfg, &ev).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|c| p.upper_bounds.contains(&c.x_u) && p.lower_bounds.contains(&c.x_l)));
    }

    #[test]
    fn sorting_by_sector() {
        let s = SectorSchedule::new(500, Profile::Optimistic);
        let out = sort_and_discard(vec![feasible(3.0, 0.0), feasible(1.0, 9.0)], 100, 2, &s).unwrap();
        assert_eq!(out[0].upper_fitness, 1.0);
        let out = sort_and_discard(vec![feasible(0.0, 5.0), feasible(9.0, 2.0)], 400, 2, &s).unwrap();
        assert_eq!(out[0].lower_fitness, 2.0);
        let input = vec![feasible(2.0, 0.0), feasible(1.0, 0.0), feasible(3.0, 0.0)];
        let out = sort_and_discard(input, 1, 10, &s).unwrap();
        assert_eq!(out.len(), 3);
        assert!(sort_and_discard(vec![], 1, 0, &s).is_err());
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let p = sq1();
        let cfg = RunConfig { generations: 0, population_size: 20, ..Default::default() };
        let r = run(&p, &cfg).unwrap();
        assert!(r.best_per_generation.is_empty());
        assert_eq!(r.evaluation_count, 20);
        let ev = Evaluator::new(&p, 1e-4).unwrap();
        let init = initialize(&p, &cfg, &ev).unwrap();
        let min = init.iter().map(|c| c.upper_fitness).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best.upper_fitness, min);
    }

    #[test]
    fn termination() {
        let cfg = RunConfig { generations: 10, ..Default::default() };
        let mut st = TerminationState::default();
        st.observe(10, (0.0, 0.0), &cfg);
        assert_eq!(check_termination(&st, &cfg), Termination::Stop);
        st.observe(4, (0.0, 0.0), &cfg);
        assert_eq!(check_termination(&st, &cfg), Termination::Continue);

        let cfg = RunConfig {
            generations: 100,
            early_stop: Some(EarlyStop { best_known_upper: 1.0, best_known_lower: 2.0, tolerance: 0.1, patience: 3 }),
            ..Default::default()
        };
        let mut st = TerminationState::default();
        let trace = [(5.0, 2.0), (1.05, 2.0), (1.0, 2.09), (0.95, 1.95)];
        let mut verdicts = vec![];
        for (g, best) in trace.iter().enumerate() {
            st.observe(g + 1, *best, &cfg);
            verdicts.push(check_termination(&st, &cfg));
        }
        use Termination::*;
        assert_eq!(verdicts, vec![Continue, Continue, Continue, Stop]);
        // A miss resets the window.
        st.observe(5, (3.0, 2.0), &cfg);
        assert_eq!(check_termination(&st, &cfg), Continue);
    }

    #[test]
    fn run_is_reproducible_and_within_budget() {
        let p = sq1();
        let cfg = RunConfig { population_size: 30, generations: 40, master_seed: 11, ..Default::default() };
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.evaluation_count, b.evaluation_count);
        assert_eq!(a.best_per_generation, b.best_per_generation);
        assert_eq!(a.best_per_generation.len(), 40);
        assert!(a.best_per_generation.iter().all(|r| r.best.len() == 5));

        let t = cfg.crossover.threshold as u64;
        let n = cfg.population_size;
        let per_clone = t + 2;
        let ls: u64 = (1..=n).map(|i| clone_count(i, n, cfg.beta).unwrap() as u64 * per_clone).sum();
        let crossover = n as u64 * t;
        let mutation = n as u64;
        let polish = n as u64 * cfg.polish_budget as u64 * (1 + t);
        let bound = n as u64 + cfg.generations as u64 * (ls + crossover + mutation + polish);
        assert!(a.evaluation_count <= bound, "{} > {bound}", a.evaluation_count);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let p = sq1();
        for cfg in [
            RunConfig { population_size: 0, ..Default::default() },
            RunConfig { beta: 0.0, ..Default::default() },
            RunConfig { delta_eq: 0.0, ..Default::default() },
            RunConfig { tournament_size: 0, ..Default::default() },
            RunConfig { mutation_rate: 1.5, ..Default::default() },
        ] {
            assert!(run(&p, &cfg).is_err());
        }
    }
}
