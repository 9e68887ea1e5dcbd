//! Intermarriage crossover and tournament selection.
//!
//! Offspring are placed on the segment between two parents at
//! `home + r^i (other - home)` for `i = 1..=T`, so each step moves the
//! offspring closer to its home parent. The first position that keeps every
//! constraint the home parent satisfies is accepted; otherwise the last
//! (closest) position is returned.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{deb_compare, FitnessKey};
use crate::error::{Error, Result};
use crate::problem::{clamp, Bounds, Candidate, Evaluator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverParams {
    /// Traversal coefficient, strictly inside (0, 1).
    pub r: f64,
    /// Traversal threshold `T >= 1`.
    pub threshold: u32,
    pub crossover_rate: f64,
}

impl Default for CrossoverParams {
    fn default() -> Self {
        Self {
            r: 0.5,
            threshold: 2,
            crossover_rate: 0.8,
        }
    }
}

impl CrossoverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidInput(format!("r must lie in (0, 1), got {}", self.r)));
        }
        if self.threshold < 1 {
            return Err(Error::InvalidInput("T must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::InvalidInput(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        Ok(())
    }
}

/// `home + r^i (other - home)`.
/// Perturbation scales are log-uniform over this many decades of the box
/// width, so one operator covers both coarse moves and fine polishing.
pub const STEP_DECADES: f64 = 9.0;

pub fn log_uniform_scale<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    10f64.powf(-STEP_DECADES * rng.gen::<f64>())
}

/// Shifts coordinates uniformly within `±scale * width`, clamped to `bounds`.
/// Each coordinate moves with probability `1/n`; at least one always does.
pub fn perturb<R: Rng + ?Sized>(values: &[f64], bounds: &Bounds, scale: f64, rng: &mut R) -> Result<Vec<f64>> {
    if values.len() != bounds.len() {
        return Err(Error::DimensionMismatch {
            what: "perturbed vector",
            expected: bounds.len(),
            actual: values.len(),
        });
    }
    let n = values.len();
    let mut out = values.to_vec();
    if n == 0 {
        return Ok(out);
    }
    let forced = rng.gen_range(0..n);
    for (k, v) in out.iter_mut().enumerate() {
        if k != forced && rng.gen::<f64>() >= 1.0 / n as f64 {
            continue;
        }
        let (lo, hi) = (bounds.lower()[k], bounds.upper()[k]);
        *v = (*v + (hi - lo) * scale * rng.gen_range(-1.0..=1.0)).clamp(lo, hi);
    }
    Ok(out)
}

/// Offspring mutation at one log-uniform scale. Half the time a sparse
/// [`perturb`] of the joint vector; otherwise every upper coordinate moves
/// together and `x_l` is left for the follower refinement. Joint moves are
/// needed where the leader's optimum sits on a vertex of its constraints.
pub fn mutate<R: Rng + ?Sized>(c: &Candidate, eval: &Evaluator<'_>, rng: &mut R) -> Result<Candidate> {
    let p = eval.problem();
    let scale = log_uniform_scale(rng);
    if rng.gen::<bool>() {
        let lo = p.upper_bounds.lower();
        let hi = p.upper_bounds.upper();
        let x_u = (0..c.x_u.len())
            .map(|k| (c.x_u[k] + (hi[k] - lo[k]) * scale * rng.gen_range(-1.0..=1.0)).clamp(lo[k], hi[k]))
            .collect();
        return eval.candidate(x_u, c.x_l.clone());
    }
    let joint_bounds = Bounds::new(
        p.upper_bounds.lower().iter().chain(p.lower_bounds.lower()).copied().collect(),
        p.upper_bounds.upper().iter().chain(p.lower_bounds.upper()).copied().collect(),
    )?;
    let moved = perturb(&c.joint(), &joint_bounds, scale, rng)?;
    let (x_u, x_l) = moved.split_at(c.x_u.len());
    eval.candidate(x_u.to_vec(), x_l.to_vec())
}

pub fn traversal_point(home: &[f64], other: &[f64], r: f64, i: u32) -> Vec<f64> {
    let step = r.powi(i as i32);
    home.iter().zip(other).map(|(h, o)| h + step * (o - h)).collect()
}

/// Default acceptance rule: the offspring keeps every constraint its home
/// parent satisfies.
pub fn keeps_parent_constraints(offspring: &Candidate, home: &Candidate) -> bool {
    offspring.satisfies_all_of(home)
}

fn offspring_toward<A>(
    home: &Candidate,
    other: &Candidate,
    accept: &A,
    params: &CrossoverParams,
    eval: &Evaluator<'_>,
) -> Result<Candidate>
where
    A: Fn(&Candidate, &Candidate) -> bool,
{
    let problem = eval.problem();
    let home_x = home.joint();
    let other_x = other.joint();
    let mut last = None;
    for i in 1..=params.threshold {
        let pos = traversal_point(&home_x, &other_x, params.r, i);
        let (u, l) = pos.split_at(problem.upper_dim);
        let x_u = clamp(u, &problem.upper_bounds)?;
        let x_l = clamp(l, &problem.lower_bounds)?;
        let child = eval.candidate(x_u, x_l)?;
        if accept(&child, home) {
            return Ok(child);
        }
        last = Some(child);
    }
    Ok(last.expect("threshold >= 1"))
}

/// Produces two offspring, `O_1` homed on `p1` and `O_2` on `p2`.
///
/// `accept(offspring, home)` decides whether a traversal position is kept.
/// Spends at most `2 T` evaluations; identical parents cost none.
pub fn intermarriage_crossover<A>(
    p1: &Candidate,
    p2: &Candidate,
    accept: A,
    params: &CrossoverParams,
    eval: &Evaluator<'_>,
) -> Result<(Candidate, Candidate)>
where
    A: Fn(&Candidate, &Candidate) -> bool,
{
    params.validate()?;
    if p1.x_u == p2.x_u && p1.x_l == p2.x_l {
        return Ok((p1.clone(), p2.clone()));
    }
    let o1 = offspring_toward(p1, p2, &accept, params, eval)?;
    let o2 = offspring_toward(p2, p1, &accept, params, eval)?;
    Ok((o1, o2))
}

/// Applies the crossover rate to one parent pair: crossed with probability
/// `crossover_rate`, otherwise copied unchanged.
pub fn crossover_pair<R: Rng + ?Sized>(
    p1: &Candidate,
    p2: &Candidate,
    params: &CrossoverParams,
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<(Candidate, Candidate)> {
    if rng.gen::<f64>() < params.crossover_rate {
        intermarriage_crossover(p1, p2, keeps_parent_constraints, params, eval)
    } else {
        Ok((p1.clone(), p2.clone()))
    }
}

/// Indices of `count` tournament winners. Each tournament draws
/// `tournament_size` distinct members; ties go to the lower index.
pub fn tournament_indices<R: Rng + ?Sized>(
    population: &[Candidate],
    count: usize,
    tournament_size: usize,
    key: FitnessKey,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if population.is_empty() {
        return Err(Error::InvalidInput("tournament over an empty population".into()));
    }
    if tournament_size == 0 {
        return Err(Error::InvalidInput("tournament size must be at least 1".into()));
    }
    let n = population.len();
    let k = tournament_size.min(n);
    let winners = (0..count)
        .map(|_| {
            sample(rng, n, k)
                .into_iter()
                .min_by(|&a, &b| match deb_compare(&population[a], &population[b], key) {
                    Ordering::Equal => a.cmp(&b),
                    o => o,
                })
                .expect("k >= 1")
        })
        .collect();
    Ok(winners)
}

pub fn tournament_selection<R: Rng + ?Sized>(
    population: &[Candidate],
    count: usize,
    tournament_size: usize,
    key: FitnessKey,
    rng: &mut R,
) -> Result<Vec<Candidate>> {
    Ok(tournament_indices(population, count, tournament_size, key, rng)?
        .into_iter()
        .map(|i| population[i].clone())
        .collect())
}
