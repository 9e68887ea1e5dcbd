//! Multi-run experiments and their post-processing: best/mean/variance
//! aggregation, the Wilcoxon rank-sum test, deviation and variance-difference
//! summaries, strategy cross matrices and the `T` sweep.

use std::cmp::Ordering;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::benchmarks::{get_problem, BenchmarkEntry, Verification};
use crate::error::{Error, Result};
use crate::seed;
use crate::solver::{run, RunConfig, RunResult};
use crate::strategy::StrategyKind;

pub const DEFAULT_RUNS: usize = 30;

/// Deviations beyond this are reported as unacceptable, i.e. capped.
pub const DEVIATION_CAP: f64 = 0.1;

/// Variance differences are clamped to `[-cap, cap]`.
pub const VARIANCE_DIFF_CAP: f64 = 1.0;

/// Largest number of rank arrangements `Auto` enumerates exactly.
pub const EXACT_LIMIT: f64 = 1e6;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Final state of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    #[serde(rename = "F")]
    pub upper: f64,
    #[serde(rename = "f")]
    pub lower: f64,
    pub satisfied: usize,
    pub feasible: bool,
    pub evaluations: u64,
    /// Leading `(F, f)` at the last generation of each sector.
    pub sector_best: Vec<(f64, f64)>,
}

impl RunRecord {
    fn from_result(run_index: usize, seed: u64, r: &RunResult, sector_ends: [usize; 4]) -> Self {
        let last = r.best_per_generation.last().and_then(|g| g.best.first()).map(|(u, l, _)| (*u, *l));
        let fallback = last.unwrap_or((r.best.upper_fitness, r.best.lower_fitness));
        Self {
            run: run_index,
            seed,
            upper: r.best.upper_fitness,
            lower: r.best.lower_fitness,
            satisfied: r.best.satisfied_total(),
            feasible: r.best.is_feasible(),
            evaluations: r.evaluation_count,
            // an early stop truncates the trace; later sectors keep its last entry
            sector_best: sector_ends.iter().map(|g| r.best_at(*g).unwrap_or(fallback)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    #[serde(rename = "best_F")]
    pub best_upper: f64,
    #[serde(rename = "best_f")]
    pub best_lower: f64,
    #[serde(rename = "mean_F")]
    pub mean_upper: f64,
    #[serde(rename = "mean_f")]
    pub mean_lower: f64,
    #[serde(rename = "var_F")]
    pub var_upper: f64,
    #[serde(rename = "var_f")]
    pub var_lower: f64,
    pub best_run: usize,
    pub runs: Vec<RunRecord>,
}

impl ProblemSummary {
    /// Aggregates raw runs; the best run is the Deb-first one (most
    /// constraints satisfied, then lowest `F`, then lowest run index).
    pub fn from_runs(runs: Vec<RunRecord>) -> Result<Self> {
        let best = runs
            .iter()
            .min_by(|a, b| deb_order((a.satisfied, a.upper), (b.satisfied, b.upper)).then(a.run.cmp(&b.run)))
            .ok_or_else(|| Error::InvalidInput("an experiment needs at least one run".into()))?;
        let uppers: Vec<f64> = runs.iter().map(|r| r.upper).collect();
        let lowers: Vec<f64> = runs.iter().map(|r| r.lower).collect();
        Ok(Self {
            best_upper: best.upper,
            best_lower: best.lower,
            best_run: best.run,
            mean_upper: mean(&uppers),
            mean_lower: mean(&lowers),
            var_upper: sample_variance(&uppers),
            var_lower: sample_variance(&lowers),
            runs,
        })
    }

    /// `F` (or `f`) samples at the end of `sector` (1..=4).
    pub fn sector_samples(&self, sector: usize, upper: bool) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| {
                let (u, l) = r.sector_best[sector - 1];
                if upper {
                    u
                } else {
                    l
                }
            })
            .collect()
    }
}

/// One row of transcribed literature results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    #[serde(rename = "Prob")]
    pub problem: String,
    #[serde(rename = "Algorithm")]
    pub algorithm: String,
    /// `best` or `average`.
    #[serde(rename = "Kind")]
    pub kind: String,
    #[serde(rename = "F")]
    pub upper: Option<f64>,
    #[serde(rename = "f")]
    pub lower: Option<f64>,
}

const PUBLISHED: &str = include_str!("../data/published_results.csv");

/// Literature values shipped with the crate for side-by-side tables. They
/// are static transcriptions and are never recomputed.
pub fn published_results() -> Result<Vec<PublishedRow>> {
    csv::Reader::from_reader(PUBLISHED.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub runs: usize,
    /// Parallel runs; `0` lets the thread pool decide.
    pub jobs: usize,
    /// Equality tolerance for every problem, overriding per-problem values.
    pub delta_override: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            runs: DEFAULT_RUNS,
            jobs: 0,
            delta_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub per_problem: IndexMap<String, ProblemSummary>,
    pub reference_rows: Vec<PublishedRow>,
}

/// Seed of run `run_index` on problem `id`.
pub fn run_seed(master: u64, id: &str, run_index: usize) -> u64 {
    seed::derive(master, &[seed::TAG_RUN, seed::hash_id(id), run_index as u64])
}

/// Runs `config.runs` independent solver runs on each registered id.
pub fn run_experiment(problem_ids: &[String], config: &ExperimentConfig) -> Result<ExperimentReport> {
    let entries = problem_ids.iter().map(|id| get_problem(id)).collect::<Result<Vec<_>>>()?;
    run_experiment_on(&entries, config)
}

/// [`run_experiment`] over explicit entries, e.g. after manifest overrides.
/// Every entry must verify.
pub fn run_experiment_on(entries: &[BenchmarkEntry], config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.runs == 0 {
        return Err(Error::InvalidInput("runs must be at least 1".into()));
    }
    config.run.validate()?;
    refuse_unverified(entries)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let sector_ends = config.run.schedule().sector_ends();

    let mut per_problem = IndexMap::new();
    for entry in entries {
        let id = entry.id().to_string();
        let delta = config.delta_override.or(entry.delta_eq).unwrap_or(config.run.delta_eq);
        let records = pool.install(|| {
            (0..config.runs)
                .into_par_iter()
                .map(|i| {
                    let seed = run_seed(config.run.master_seed, &id, i);
                    let rc = RunConfig {
                        master_seed: seed,
                        delta_eq: delta,
                        ..config.run.clone()
                    };
                    let r = run(&entry.problem, &rc)?;
                    Ok(RunRecord::from_result(i, seed, &r, sector_ends))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        per_problem.insert(id, ProblemSummary::from_runs(records)?);
    }
    let ids: Vec<&str> = entries.iter().map(|e| e.id()).collect();
    let reference_rows = published_results()?
        .into_iter()
        .filter(|r| ids.contains(&r.problem.as_str()))
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        per_problem,
        reference_rows,
    })
}

fn refuse_unverified(entries: &[BenchmarkEntry]) -> Result<()> {
    let refused: Vec<(String, String)> = entries
        .iter()
        .filter_map(|e| match e.verify() {
            Verification::Verified => None,
            Verification::Unverified(why) => Some((e.id().to_string(), why)),
        })
        .collect();
    if refused.is_empty() {
        return Ok(());
    }
    Err(Error::Unverified {
        id: refused.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>().join(", "),
        reason: refused.iter().map(|(id, why)| format!("{id}: {why}")).collect::<Vec<_>>().join("; "),
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (`n - 1` denominator); zero for a single value.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn deviation(found: f64, known: f64) -> f64 {
    (found - known).abs().min(DEVIATION_CAP)
}

pub fn variance_diff(var_optimistic: f64, var_pessimistic: f64) -> f64 {
    (var_optimistic - var_pessimistic).clamp(-VARIANCE_DIFF_CAP, VARIANCE_DIFF_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMode {
    Exact,
    Normal,
    /// Exact while the arrangement count stays within [`EXACT_LIMIT`].
    Auto,
}

/// Doubled midranks of `pooled`, so tied ranks stay integral.
pub fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|a, b| pooled[*a].total_cmp(&pooled[*b]));
    let mut ranks = vec![0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        // positions i+1..=j share the rank (i + 1 + j) / 2
        for k in &order[i..j] {
            ranks[*k] = (i + 1 + j) as u64;
        }
        i = j;
    }
    ranks
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Two-tailed p-value of the rank-sum statistic of `a` against `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], mode: WilcoxonMode) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("rank-sum test needs finite samples".into()));
    }
    let n = a.len();
    let total = n + b.len();
    let exact = match mode {
        WilcoxonMode::Exact => true,
        WilcoxonMode::Normal => false,
        WilcoxonMode::Auto => binomial(total, n) <= EXACT_LIMIT,
    };
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    if exact {
        exact_p(&ranks, n)
    } else {
        Ok(normal_p(&pooled, &ranks, n))
    }
}

/// Counts, over all size-`n` subsets of `ranks`, those whose rank sum is at
/// least as far from its mean as the observed first-`n` sum.
fn exact_p(ranks: &[u64], n: usize) -> Result<f64> {
    let total_sum: u64 = ranks.iter().sum();
    let observed: u64 = ranks[..n].iter().sum();
    // doubled mean of the statistic, scaled by N so everything stays integral
    let big_n = ranks.len() as i128;
    let centre = n as i128 * total_sum as i128;
    let far = |s: u64| (big_n * s as i128 - centre).abs();
    let threshold = far(observed);

    let width = total_sum as usize + 1;
    // counts[k * width + s]: subsets of size k with doubled rank sum s
    let mut counts = vec![0u128; (n + 1) * width];
    counts[0] = 1;
    for (seen, r) in ranks.iter().enumerate() {
        let r = *r as usize;
        for k in (1..=n.min(seen + 1)).rev() {
            for s in (r..width).rev() {
                let add = counts[(k - 1) * width + s - r];
                if add > 0 {
                    let cell = &mut counts[k * width + s];
                    *cell = cell
                        .checked_add(add)
                        .ok_or_else(|| Error::InvalidInput("samples too large for exact enumeration".into()))?;
                }
            }
        }
    }
    let row = &counts[n * width..];
    let all: u128 = row.iter().sum();
    let extreme: u128 = row
        .iter()
        .enumerate()
        .filter(|(s, c)| **c > 0 && far(*s as u64) >= threshold)
        .map(|(_, c)| c)
        .sum();
    Ok(extreme as f64 / all as f64)
}

/// Tie-corrected normal approximation with continuity correction.
fn normal_p(pooled: &[f64], ranks: &[u64], n: usize) -> f64 {
    let big_n = pooled.len() as f64;
    let (nf, mf) = (n as f64, big_n - n as f64);
    let w = ranks[..n].iter().sum::<u64>() as f64 / 2.0;
    let mu = nf * (big_n + 1.0) / 2.0;

    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let correction = if big_n > 1.0 { tie_term / (big_n * (big_n - 1.0)) } else { 0.0 };
    let var = nf * mf / 12.0 * ((big_n + 1.0) - correction);
    if !(var > 0.0) {
        return 1.0;
    }
    let z = (((w - mu).abs() - 0.5).max(0.0)) / var.sqrt();
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * std.sf(z)).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Symmetric matrix of problem sets with a significant rank-sum difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMatrix {
    pub strategies: Vec<String>,
    /// `cells[i][j]`: problems where strategies `i` and `j` differ; the
    /// diagonal is empty.
    pub cells: Vec<Vec<Vec<String>>>,
}

/// Pairwise rank-sum tests between strategies, per problem.
///
/// `results` maps a strategy label to per-problem samples; every strategy
/// must cover the same problems with the same sample counts.
pub fn cross_strategy_matrix(
    results: &IndexMap<String, IndexMap<String, Vec<f64>>>,
    alpha: f64,
) -> Result<StrategyMatrix> {
    let strategies: Vec<String> = results.keys().cloned().collect();
    let Some(first) = results.values().next() else {
        return Ok(StrategyMatrix {
            strategies,
            cells: Vec::new(),
        });
    };
    for (name, per_problem) in results {
        let same = per_problem.len() == first.len()
            && first
                .iter()
                .all(|(p, xs)| per_problem.get(p).is_some_and(|ys| ys.len() == xs.len()));
        if !same {
            return Err(Error::InvalidInput(format!(
                "strategy {name} does not share the problems and run counts of {}",
                strategies[0]
            )));
        }
    }
    let k = strategies.len();
    let mut cells = vec![vec![Vec::new(); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (&results[i], &results[j]);
            let mut hits = Vec::new();
            for problem in first.keys() {
                if wilcoxon_rank_sum(&a[problem], &b[problem], WilcoxonMode::Auto)? < alpha {
                    hits.push(problem.clone());
                }
            }
            cells[j][i] = hits.clone();
            cells[i][j] = hits;
        }
    }
    Ok(StrategyMatrix { strategies, cells })
}

/// Per-strategy samples at sector ends: every sector's strategy is sampled
/// at that sector's last generation, for `F` when `upper` and `f` otherwise.
pub fn sector_samples(
    reports: &[&ExperimentReport],
    upper: bool,
) -> Result<IndexMap<String, IndexMap<String, Vec<f64>>>> {
    let mut out: IndexMap<String, IndexMap<String, Vec<f64>>> = IndexMap::new();
    for report in reports {
        let schedule = report.config.run.schedule();
        for (sector, end) in schedule.sector_ends().iter().enumerate() {
            if *end == 0 {
                continue;
            }
            let kind: StrategyKind = crate::strategy::strategy_for_sector(*end, &schedule)?;
            let slot = out.entry(kind.label().to_string()).or_default();
            for (id, summary) in &report.per_problem {
                if slot.contains_key(id) {
                    return Err(Error::InvalidInput(format!(
                        "strategy {kind} appears in more than one sector for {id}"
                    )));
                }
                slot.insert(id.clone(), summary.sector_samples(sector + 1, upper));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSweepRow {
    #[serde(rename = "T")]
    pub t: u32,
    #[serde(rename = "Prob")]
    pub problem: String,
    /// Mean over runs of `|F - F_b| + |f - f_b|`.
    pub quality: f64,
}

pub fn quality(found: (f64, f64), known: (f64, f64)) -> f64 {
    (found.0 - known.0).abs() + (found.1 - known.1).abs()
}

/// Reruns the experiment once per threshold and records mean quality.
pub fn t_sweep(entries: &[BenchmarkEntry], t_values: &[u32], config: &ExperimentConfig) -> Result<Vec<TSweepRow>> {
    if t_values.is_empty() {
        return Err(Error::InvalidInput("T sweep needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &t in t_values {
        let mut cfg = config.clone();
        cfg.run.crossover.threshold = t;
        let report = run_experiment_on(entries, &cfg)?;
        for entry in entries {
            let summary = &report.per_problem[entry.id()];
            let known = (entry.best_known_upper, entry.best_known_lower);
            let q: Vec<f64> = summary.runs.iter().map(|r| quality((r.upper, r.lower), known)).collect();
            rows.push(TSweepRow {
                t,
                problem: entry.id().to_string(),
                quality: mean(&q),
            });
        }
    }
    Ok(rows)
}

/// Orders `(satisfied, F)` pairs the way [`ProblemSummary::from_runs`] picks
/// its best run.
pub fn deb_order(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.0.cmp(&a.0).then(a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(run: usize, upper: f64, lower: f64, satisfied: usize) -> RunRecord {
        RunRecord {
            run,
            seed: 0,
            upper,
            lower,
            satisfied,
            feasible: true,
            evaluations: 0,
            sector_best: vec![(upper, lower); 4],
        }
    }

    #[test]
    fn aggregation() {
        let s = ProblemSummary::from_runs(vec![record(0, 3.0, 1.0, 2), record(1, 1.0, 2.0, 2), record(2, -5.0, 0.0, 1)])
            .unwrap();
        assert_eq!((s.best_upper, s.best_lower, s.best_run), (1.0, 2.0, 1));
        assert!((s.mean_upper - (-1.0 / 3.0)).abs() < 1e-12);
        // sample variance of {3, 1, -5}: mean -1/3, squares sum 104/3, / 2
        assert!((s.var_upper - 52.0 / 3.0).abs() < 1e-12);
        let one = ProblemSummary::from_runs(vec![record(0, 3.0, 1.0, 2)]).unwrap();
        assert_eq!((one.var_upper, one.var_lower), (0.0, 0.0));
        assert!(ProblemSummary::from_runs(vec![]).is_err());
    }

    #[test]
    fn deviation_and_variance_caps() {
        assert!((deviation(225.00009, 225.0) - 0.00009).abs() < 1e-12);
        assert_eq!(deviation(1.5, 1.0), 0.1);
        assert_eq!(deviation(2.0, 2.0), 0.0);
        assert_eq!(variance_diff(0.0, 0.0), 0.0);
        assert_eq!(variance_diff(3.0, 0.5), 1.0);
        assert!((variance_diff(0.2, 0.5) + 0.3).abs() < 1e-12);
        assert_eq!(variance_diff(0.0, 4.0), -1.0);
    }

    #[test]
    fn wilcoxon_examples() {
        let p = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], WilcoxonMode::Exact).unwrap();
        assert_eq!(p, 0.1);
        let same = [2.0; 5];
        for mode in [WilcoxonMode::Exact, WilcoxonMode::Normal, WilcoxonMode::Auto] {
            assert_eq!(wilcoxon_rank_sum(&same, &same, mode).unwrap(), 1.0);
        }
        assert!(wilcoxon_rank_sum(&[], &[1.0], WilcoxonMode::Auto).is_err());
        assert!(wilcoxon_rank_sum(&[f64::NAN], &[1.0], WilcoxonMode::Auto).is_err());
        let a: Vec<f64> = (0..15).map(|i| i as f64 * 0.1).collect();
        let b: Vec<f64> = (0..15).map(|i| 10.0 + i as f64 * 0.1).collect();
        assert!(wilcoxon_rank_sum(&a, &b, WilcoxonMode::Normal).unwrap() < 0.05);
    }

    #[test]
    fn midranks_handle_ties() {
        assert_eq!(doubled_midranks(&[3.0, 1.0, 3.0, 2.0]), vec![7, 2, 7, 4]);
    }

    #[test]
    fn matrix_shape_and_errors() {
        let mut results = IndexMap::new();
        let base: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let shifted: Vec<f64> = base.iter().map(|x| x + 100.0).collect();
        results.insert("A".to_string(), IndexMap::from([("TP1".to_string(), shifted), ("TP2".to_string(), base.clone())]));
        results.insert("B".to_string(), IndexMap::from([("TP1".to_string(), base.clone()), ("TP2".to_string(), base.clone())]));
        results.insert("C".to_string(), IndexMap::from([("TP1".to_string(), base.clone()), ("TP2".to_string(), base.clone())]));
        let m = cross_strategy_matrix(&results, DEFAULT_ALPHA).unwrap();
        assert_eq!(m.cells[0][1], vec!["TP1".to_string()]);
        assert_eq!(m.cells[1][0], m.cells[0][1]);
        assert!(m.cells[1][2].is_empty());
        assert!((0..3).all(|i| m.cells[i][i].is_empty()));

        results.insert("D".to_string(), IndexMap::from([("TP1".to_string(), base.clone())]));
        assert!(cross_strategy_matrix(&results, DEFAULT_ALPHA).is_err());
    }

    #[test]
    fn published_rows_load() {
        let rows = published_results().unwrap();
        let bleaq_tp1 = rows
            .iter()
            .find(|r| r.problem == "TP1" && r.algorithm == "BLEAQ" && r.kind == "best")
            .unwrap();
        assert_eq!((bleaq_tp1.upper, bleaq_tp1.lower), (Some(225.0), Some(100.0)));
        assert!(rows.iter().any(|r| r.algorithm == "HPSOBLP" && r.problem == "TP5" && r.upper.is_none()));
    }

    #[test]
    fn run_seeds_are_keyed() {
        assert_ne!(run_seed(7, "TP9", 0), run_seed(7, "TP9", 1));
        assert_ne!(run_seed(7, "TP9", 0), run_seed(7, "TP10", 0));
        assert_eq!(run_seed(7, "TP9", 3), run_seed(7, "TP9", 3));
    }

    #[test]
    fn deb_order_prefers_satisfaction() {
        assert_eq!(deb_order((2, 5.0), (1, -100.0)), Ordering::Less);
        assert_eq!(deb_order((2, 1.0), (2, 5.0)), Ordering::Less);
    }
}
