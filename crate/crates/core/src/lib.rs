//! Evolutionary bilevel optimization with constraint-guided intermarriage
//! crossover, lower-level hyper-cloning local search and sector-scheduled
//! optimistic/pessimistic selection strategies.

pub mod benchmarks;
pub mod constraint;
pub mod error;
pub mod local_search;
pub mod problem;
pub mod report;
pub mod seed;
pub mod solver;
pub mod stats;
pub mod strategy;
pub mod variation;

pub use benchmarks::{best_known, estimate_rho, get_problem, BenchmarkEntry};
pub use constraint::{deb_compare, deb_sort, FitnessKey};
pub use error::{Error, Result};
pub use problem::{evaluate, BilevelProblem, Bounds, Candidate, Evaluation, Evaluator};
pub use solver::{run, RunConfig, RunResult};
pub use stats::{run_experiment, wilcoxon_rank_sum, ExperimentConfig, ExperimentReport, WilcoxonMode};
pub use strategy::{Profile, SectorSchedule, Strategy, StrategyKind};
