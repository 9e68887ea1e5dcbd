//! Lower-level exploitation: each feasible chromosome is hyper-cloned, every
//! clone is paired with a random corner of the lower-level box, and the
//! traversal between the chromosome and that corner (in the `x_l` plane only)
//! produces the candidate pool the sector's strategy chooses from.

use std::cmp::Ordering;

use rand::Rng;

use crate::constraint::deb_compare;
use crate::error::{Error, Result};
use crate::problem::{clamp, Bounds, Candidate, Evaluator};
use crate::seed;
use crate::solver::RunConfig;
use crate::strategy::{select_index, SectorSchedule, Strategy, StrategyContext};
use crate::variation::{perturb, traversal_point, CrossoverParams, STEP_DECADES};

pub const MAX_CLONES: usize = 10;

/// `min(10, ceil(beta * N / rank))` for a 1-based fitness rank.
pub fn clone_count(rank: usize, population_size: usize, beta: f64) -> Result<usize> {
    if rank == 0 || rank > population_size {
        return Err(Error::InvalidInput(format!(
            "rank {rank} outside 1..={population_size}"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let n = (beta * population_size as f64 / rank as f64).ceil() as usize;
    Ok(n.clamp(1, MAX_CLONES))
}

/// Each lower-level coordinate snapped to its lower or upper bound with
/// probability one half.
pub fn boundary_point<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> Vec<f64> {
    bounds
        .lower()
        .iter()
        .zip(bounds.upper())
        .map(|(lo, hi)| if rng.gen::<bool>() { *lo } else { *hi })
        .collect()
}

/// Evaluated copy of `c` whose `x_l` sits on a random corner of `bounds`.
pub fn boundary_clone<R: Rng + ?Sized>(
    c: &Candidate,
    bounds: &Bounds,
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<Candidate> {
    eval.candidate(c.x_u.clone(), boundary_point(bounds, rng))
}

/// Hyper-mutated copy of `c`: `x_l` shifted uniformly within `±scale`
/// times the box width, clamped to `bounds`.
pub fn perturbed_clone<R: Rng + ?Sized>(
    c: &Candidate,
    bounds: &Bounds,
    scale: f64,
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<Candidate> {
    let x_l = perturb(&c.x_l, bounds, scale, rng)?;
    eval.candidate(c.x_u.clone(), x_l)
}

/// Difference `[x_u; x_l] - [x_u; B(x_l)]`; the upper block is always zero.
pub fn clone_difference(c: &Candidate, clone: &Candidate) -> Vec<f64> {
    c.x_u
        .iter()
        .zip(&clone.x_u)
        .chain(c.x_l.iter().zip(&clone.x_l))
        .map(|(a, b)| a - b)
        .collect()
}

pub fn clone_distance(c: &Candidate, clone: &Candidate) -> f64 {
    clone_difference(c, clone).iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Hyper-mutated clones generated for one chromosome.
#[derive(Debug, Clone)]
pub struct CloneBatch {
    pub source: Candidate,
    pub clones: Vec<Candidate>,
    pub count: usize,
}

impl CloneBatch {
    pub fn generate<R: Rng + ?Sized>(
        source: &Candidate,
        count: usize,
        bounds: &Bounds,
        eval: &Evaluator<'_>,
        rng: &mut R,
    ) -> Result<Self> {
        if count == 0 || count > MAX_CLONES {
            return Err(Error::InvalidInput(format!("clone count {count} outside 1..={MAX_CLONES}")));
        }
        let clones = (0..count)
            .map(|k| perturbed_clone(source, bounds, stratified_scale(k, count, rng), eval, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: source.clone(),
            clones,
            count,
        })
    }
}

/// 1-based Deb ranks of each member under `key`, ties by position.
fn deb_ranks(population: &[Candidate], key: crate::constraint::FitnessKey) -> Vec<usize> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| match deb_compare(&population[a], &population[b], key) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let mut rank = vec![0; population.len()];
    for (pos, idx) in order.into_iter().enumerate() {
        rank[idx] = pos + 1;
    }
    rank
}

/// Clone `k` of `count`: its perturbation scale is stratified over the
/// decades, coarse first.
fn stratified_scale<R: Rng + ?Sized>(k: usize, count: usize, rng: &mut R) -> f64 {
    let u = (k as f64 + rng.gen::<f64>()) / count as f64;
    10f64.powf(-STEP_DECADES * u)
}

/// Candidate pool for one chromosome.
///
/// Clones are produced in sequence from coarse to fine scale, each one a
/// perturbation of the pool's current winner under `strategy`. Every clone
/// is intermarried with a random corner of the lower-level box (its `T`
/// traversal points join the pool). When a clone's batch takes over as
/// winner, it is intermarried once more with the winner it displaced, which
/// pulls back overshooting steps.
///
/// Evaluations per clone: at most `2T + 1`.
pub fn clone_pool<R: Rng + ?Sized>(
    c: &Candidate,
    clones: usize,
    strategy: &Strategy,
    ctx: &StrategyContext,
    config: &RunConfig,
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<Vec<Candidate>> {
    if clones == 0 || clones > MAX_CLONES {
        return Err(Error::InvalidInput(format!("clone count {clones} outside 1..={MAX_CLONES}")));
    }
    let bounds = &eval.problem().lower_bounds;
    let CrossoverParams { r, threshold, .. } = config.crossover;
    let mut pool = Vec::with_capacity(1 + clones * (1 + 2 * threshold as usize));
    pool.push(c.clone());
    let mut center = 0;
    for k in 0..clones {
        let h = perturbed_clone(&pool[center], bounds, stratified_scale(k, clones, rng), eval, rng)?;
        let corner = boundary_point(bounds, rng);
        for i in 1..=threshold {
            let x_l = clamp(&traversal_point(&h.x_l, &corner, r, i), bounds)?;
            pool.push(eval.candidate(c.x_u.clone(), x_l)?);
        }
        pool.push(h);
        let Some(winner) = select_index(strategy, &pool, ctx, rng)? else {
            continue;
        };
        if winner != center && pool[winner].x_l != pool[center].x_l {
            let (home, other) = (pool[winner].x_l.clone(), pool[center].x_l.clone());
            for i in 1..=threshold {
                let x_l = clamp(&traversal_point(&home, &other, r, i), bounds)?;
                pool.push(eval.candidate(c.x_u.clone(), x_l)?);
            }
            center = select_index(strategy, &pool, ctx, rng)?.unwrap_or(winner);
        } else {
            center = winner;
        }
    }
    Ok(pool)
}

/// Step-size adaptive refinement of `c.x_l` with `x_u` held fixed.
///
/// A sequence of `budget` perturbed clones, each taken from the current
/// winner under `strategy`; the step scale grows after a clone takes over
/// and shrinks otherwise. A clone that takes over is also intermarried with
/// the winner it displaced. Returns the final winner.
pub fn refine_lower<R: Rng + ?Sized>(
    c: &Candidate,
    budget: usize,
    strategy: &Strategy,
    config: &RunConfig,
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<Candidate> {
    const GROW: f64 = 2.0;
    const SHRINK: f64 = 0.85;
    let floor = 10f64.powf(-STEP_DECADES);
    let bounds = &eval.problem().lower_bounds;
    let CrossoverParams { r, threshold, .. } = config.crossover;
    let ctx = StrategyContext::from_incumbent(c);
    let mut pool = vec![c.clone()];
    let mut center = 0;
    let mut scale: f64 = 0.1;
    for _ in 0..budget {
        let h = perturbed_clone(&pool[center], bounds, scale, eval, rng)?;
        pool.push(h);
        let winner = select_index(strategy, &pool, &ctx, rng)?.unwrap_or(center);
        if winner != center && pool[winner].x_l != pool[center].x_l {
            let (home, other) = (pool[winner].x_l.clone(), pool[center].x_l.clone());
            for i in 1..=threshold {
                let x_l = clamp(&traversal_point(&home, &other, r, i), bounds)?;
                pool.push(eval.candidate(c.x_u.clone(), x_l)?);
            }
            center = select_index(strategy, &pool, &ctx, rng)?.unwrap_or(winner);
            scale = (scale * GROW).min(1.0);
        } else {
            scale = (scale * SHRINK).max(floor);
        }
    }
    Ok(pool.swap_remove(center))
}

/// Runs the exploitation step on one generation's population.
///
/// Infeasible chromosomes pass through untouched, as do those skipped by
/// the `blmutation_rate` draw. Output has the input's length and order.
pub fn local_search(
    population: &[Candidate],
    generation: usize,
    config: &RunConfig,
    schedule: &SectorSchedule,
    eval: &Evaluator<'_>,
) -> Result<Vec<Candidate>> {
    let key = schedule.sort_key(generation)?;
    let strategy = Strategy {
        kind: schedule.local_search_strategy(generation)?,
        tie_epsilon: config.tie_epsilon,
    };
    let ranks = deb_ranks(population, key);
    let n = population.len();

    population
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let mut rng = seed::stream(config.master_seed, &[seed::TAG_LOCAL_SEARCH, generation as u64, idx as u64]);
            if !c.is_feasible() || rng.gen::<f64>() >= config.blmutation_rate {
                return Ok(c.clone());
            }
            let clones = clone_count(ranks[idx], n, config.beta)?;
            let ctx = StrategyContext::from_incumbent(c);
            let pool = clone_pool(c, clones, &strategy, &ctx, config, eval, &mut rng)?;
            Ok(match select_index(&strategy, &pool, &ctx, &mut rng)? {
                Some(i) => pool[i].clone(),
                None => c.clone(),
            })
        })
        .collect()
}
