//! Convergence strategies: how a follower response is chosen from a finite
//! set of candidates that share the same leader decision.
//!
//! * `O_F` / `P_F`: restrict to the lower-level optimal tie set, then take
//!   the best / worst upper objective.
//! * `O_f` / `P_f`: the level-mirrored rules (tie on `F`, extreme on `f`).
//! * `EO_F` / `EP_F`: keep candidates whose `f` is no worse than the previous
//!   lower-level value, then take the best / worst `F`. May select nothing.
//! * `EO_f` / `EP_f`: mirrored, filtering on the previous `F`.
//! * `RANDOM_TIE`: any member of the lower-level tie set, uniformly.
//!
//! Before any rule runs, the pool is narrowed to lower-feasible candidates
//! when at least one exists, otherwise to those satisfying the most
//! lower-level constraints.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::FitnessKey;
use crate::error::{Error, Result};
use crate::problem::Candidate;

/// Relative tie tolerance. Optimistic and pessimistic picks may move the
/// follower anywhere inside this window, and that slack shows up in `F`
/// scaled by the leader's sensitivity, so it is kept tight.
pub const DEFAULT_TIE_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "O_F")]
    OptimisticUpper,
    #[serde(rename = "O_f")]
    OptimisticLower,
    #[serde(rename = "P_F")]
    PessimisticUpper,
    #[serde(rename = "P_f")]
    PessimisticLower,
    #[serde(rename = "EO_F")]
    ExtremeOptimisticUpper,
    #[serde(rename = "EO_f")]
    ExtremeOptimisticLower,
    #[serde(rename = "EP_F")]
    ExtremePessimisticUpper,
    #[serde(rename = "EP_f")]
    ExtremePessimisticLower,
    #[serde(rename = "RANDOM_TIE")]
    RandomTie,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::OptimisticUpper,
        StrategyKind::OptimisticLower,
        StrategyKind::PessimisticUpper,
        StrategyKind::PessimisticLower,
        StrategyKind::ExtremeOptimisticUpper,
        StrategyKind::ExtremeOptimisticLower,
        StrategyKind::ExtremePessimisticUpper,
        StrategyKind::ExtremePessimisticLower,
        StrategyKind::RandomTie,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::OptimisticUpper => "O_F",
            StrategyKind::OptimisticLower => "O_f",
            StrategyKind::PessimisticUpper => "P_F",
            StrategyKind::PessimisticLower => "P_f",
            StrategyKind::ExtremeOptimisticUpper => "EO_F",
            StrategyKind::ExtremeOptimisticLower => "EO_f",
            StrategyKind::ExtremePessimisticUpper => "EP_F",
            StrategyKind::ExtremePessimisticLower => "EP_f",
            StrategyKind::RandomTie => "RANDOM_TIE",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown strategy '{s}'; expected one of {}",
                    StrategyKind::ALL.map(|k| k.label()).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Relative tolerance used when forming tie sets.
    pub tie_epsilon: f64,
}

impl Strategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            tie_epsilon: DEFAULT_TIE_EPSILON,
        }
    }
}

/// Previous-generation values consulted by the extreme variants.
/// `+inf` means there is no history yet, so nothing is filtered out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyContext {
    pub previous_lower: f64,
    pub previous_upper: f64,
}

impl Default for StrategyContext {
    fn default() -> Self {
        Self {
            previous_lower: f64::INFINITY,
            previous_upper: f64::INFINITY,
        }
    }
}

impl StrategyContext {
    pub fn from_incumbent(c: &Candidate) -> Self {
        Self {
            previous_lower: c.lower_fitness,
            previous_upper: c.upper_fitness,
        }
    }
}

#[derive(Clone, Copy)]
enum Extreme {
    Min,
    Max,
}

fn eligible(candidates: &[Candidate]) -> Vec<usize> {
    let feasible: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].is_lower_feasible())
        .collect();
    if !feasible.is_empty() {
        return feasible;
    }
    let most = candidates.iter().map(|c| c.satisfied_lower).max().unwrap_or(0);
    (0..candidates.len())
        .filter(|&i| candidates[i].satisfied_lower == most)
        .collect()
}

/// Members of `pool` whose `key` is within the relative tolerance of the minimum.
fn tie_set(candidates: &[Candidate], pool: &[usize], key: FitnessKey, eps: f64) -> Vec<usize> {
    let min = pool
        .iter()
        .map(|&i| key.of(&candidates[i]))
        .fold(f64::INFINITY, f64::min);
    let tol = eps * min.abs();
    pool.iter()
        .copied()
        .filter(|&i| key.of(&candidates[i]) <= min + tol)
        .collect()
}

/// Extreme of `key` over `pool`; exact ties are broken uniformly at random.
fn pick_extreme<R: Rng + ?Sized>(
    candidates: &[Candidate],
    pool: &[usize],
    key: FitnessKey,
    extreme: Extreme,
    rng: &mut R,
) -> Option<usize> {
    let target = pool.iter().map(|&i| key.of(&candidates[i])).reduce(|a, b| match extreme {
        Extreme::Min => a.min(b),
        Extreme::Max => a.max(b),
    })?;
    let best: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| key.of(&candidates[i]) == target)
        .collect();
    match best.len() {
        1 => Some(best[0]),
        n => Some(best[rng.gen_range(0..n)]),
    }
}

/// Index of the selected candidate, or `None` when an extreme variant finds
/// no candidate at least as good as the previous generation.
pub fn select_index<R: Rng + ?Sized>(
    strategy: &Strategy,
    candidates: &[Candidate],
    ctx: &StrategyContext,
    rng: &mut R,
) -> Result<Option<usize>> {
    use FitnessKey::{Lower, Upper};
    use StrategyKind::*;

    if candidates.is_empty() {
        return Err(Error::InvalidInput("strategy selection over an empty candidate set".into()));
    }
    let eps = strategy.tie_epsilon;
    let pool = eligible(candidates);

    let tie_then = |tie_key: FitnessKey, pick_key: FitnessKey, extreme: Extreme, rng: &mut R| {
        let psi = tie_set(candidates, &pool, tie_key, eps);
        pick_extreme(candidates, &psi, pick_key, extreme, rng)
    };
    let filter_then = |filter_key: FitnessKey, bound: f64, pick_key: FitnessKey, extreme: Extreme, rng: &mut R| {
        let omega: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&i| filter_key.of(&candidates[i]) <= bound)
            .collect();
        pick_extreme(candidates, &omega, pick_key, extreme, rng)
    };

    let chosen = match strategy.kind {
        OptimisticUpper => tie_then(Lower, Upper, Extreme::Min, rng),
        PessimisticUpper => tie_then(Lower, Upper, Extreme::Max, rng),
        OptimisticLower => tie_then(Upper, Lower, Extreme::Min, rng),
        PessimisticLower => tie_then(Upper, Lower, Extreme::Max, rng),
        ExtremeOptimisticUpper => filter_then(Lower, ctx.previous_lower, Upper, Extreme::Min, rng),
        ExtremePessimisticUpper => filter_then(Lower, ctx.previous_lower, Upper, Extreme::Max, rng),
        ExtremeOptimisticLower => filter_then(Upper, ctx.previous_upper, Lower, Extreme::Min, rng),
        ExtremePessimisticLower => filter_then(Upper, ctx.previous_upper, Lower, Extreme::Max, rng),
        RandomTie => {
            let psi = tie_set(candidates, &pool, Lower, eps);
            Some(psi[rng.gen_range(0..psi.len())])
        }
    };
    Ok(chosen)
}

pub fn select<'c, R: Rng + ?Sized>(
    strategy: &Strategy,
    candidates: &'c [Candidate],
    ctx: &StrategyContext,
    rng: &mut R,
) -> Result<Option<&'c Candidate>> {
    Ok(select_index(strategy, candidates, ctx, rng)?.map(|i| &candidates[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Optimistic,
    Pessimistic,
}

impl Profile {
    pub fn label(self) -> &'static str {
        match self {
            Profile::Optimistic => "optimistic",
            Profile::Pessimistic => "pessimistic",
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimistic" => Ok(Profile::Optimistic),
            "pessimistic" => Ok(Profile::Pessimistic),
            _ => Err(Error::InvalidInput(format!(
                "unknown profile '{s}'; expected optimistic or pessimistic"
            ))),
        }
    }
}

/// Quartering of the generation budget into sectors S1..S4.
///
/// With `q = generations / 4`, S1 = 1..=q, S2 = q+1..=2q, S3 = 2q+1..=3q and
/// S4 takes the rest, so a budget not divisible by four grows the last sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSchedule {
    pub generations: usize,
    pub profile: Profile,
    /// Per-sector replacement for the default strategy.
    pub overrides: [Option<StrategyKind>; 4],
}

impl SectorSchedule {
    pub fn new(generations: usize, profile: Profile) -> Self {
        Self {
            generations,
            profile,
            overrides: [None; 4],
        }
    }

    /// Sector number in 1..=4.
    pub fn sector(&self, generation: usize) -> Result<usize> {
        if generation == 0 || generation > self.generations {
            return Err(Error::GenerationOutOfRange {
                generation,
                total: self.generations,
            });
        }
        let q = self.generations / 4;
        Ok(if generation <= q {
            1
        } else if generation <= 2 * q {
            2
        } else if generation <= 3 * q {
            3
        } else {
            4
        })
    }

    /// Last generation of each sector; empty sectors repeat the previous end.
    pub fn sector_ends(&self) -> [usize; 4] {
        let q = self.generations / 4;
        [q, 2 * q, 3 * q, self.generations]
    }

    /// Population sort key: `F` in S1 and S2, `f` in S3 and S4.
    pub fn sort_key(&self, generation: usize) -> Result<FitnessKey> {
        Ok(match self.sector(generation)? {
            1 | 2 => FitnessKey::Upper,
            _ => FitnessKey::Lower,
        })
    }

    /// Strategy applied inside the lower-level local search: the plain
    /// variant in S2 and S3, the extreme variant in S1 and S4.
    pub fn local_search_strategy(&self, generation: usize) -> Result<StrategyKind> {
        let sector = self.sector(generation)?;
        if let Some(k) = self.overrides[sector - 1] {
            return Ok(k);
        }
        use StrategyKind::*;
        Ok(match (self.profile, sector) {
            (Profile::Optimistic, 2 | 3) => OptimisticUpper,
            (Profile::Optimistic, _) => ExtremeOptimisticUpper,
            (Profile::Pessimistic, 2 | 3) => PessimisticUpper,
            (Profile::Pessimistic, _) => ExtremePessimisticUpper,
        })
    }
}

/// Convergence strategy that characterizes a generation's sector.
pub fn strategy_for_sector(generation: usize, schedule: &SectorSchedule) -> Result<StrategyKind> {
    use StrategyKind::*;
    let sector = schedule.sector(generation)?;
    if let Some(k) = schedule.overrides[sector - 1] {
        return Ok(k);
    }
    let defaults = match schedule.profile {
        Profile::Optimistic => [ExtremeOptimisticUpper, OptimisticUpper, OptimisticLower, ExtremeOptimisticLower],
        Profile::Pessimistic => [ExtremePessimisticUpper, PessimisticUpper, PessimisticLower, ExtremePessimisticLower],
    };
    Ok(defaults[sector - 1])
}
