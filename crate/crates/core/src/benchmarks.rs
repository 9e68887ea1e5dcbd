//! Benchmark registry: the TP1–TP10 bilevel test set, two analytic sanity
//! problems, reference optima, and Monte Carlo constraint-strength
//! estimation.
//!
//! TP definitions follow the standard single-objective bilevel test set of
//! Sinha, Malo and Deb (IEEE CEC 2014, "An improved bilevel evolutionary
//! algorithm based on quadratic approximations"), with the sign and bound
//! conventions noted per problem. Every TP entry carries a reference point;
//! an entry is verified only when that point is feasible and reproduces the
//! recorded best-known `(F, f)` within [`VERIFY_TOLERANCE`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{equality_to_inequality, violation};
use crate::error::{Error, Result};
use crate::problem::{evaluate, sample_uniform, BilevelProblem, Bounds};
use crate::seed;

/// Absolute tolerance between a reference point's objectives and the
/// recorded best-known values.
pub const VERIFY_TOLERANCE: f64 = 0.01;

/// Round-off allowance for reference points that sit on active constraints.
const REFERENCE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BenchmarkEntry {
    pub problem: BilevelProblem,
    pub best_known_upper: f64,
    pub best_known_lower: f64,
    /// Published constraint strength; `None` for the sanity problems.
    pub rho_reference: Option<f64>,
    /// A point known to attain the best-known values.
    pub reference_point: (Vec<f64>, Vec<f64>),
    /// Equality tolerance override (manifest).
    pub delta_eq: Option<f64>,
    pub source: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verification {
    Verified,
    Unverified(String),
}

impl Verification {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verification::Verified)
    }
}

impl BenchmarkEntry {
    pub fn id(&self) -> &str {
        &self.problem.id
    }

    pub fn verify(&self) -> Verification {
        let (x_u, x_l) = &self.reference_point;
        let p = &self.problem;
        if !p.upper_bounds.contains(x_u) || !p.lower_bounds.contains(x_l) {
            return Verification::Unverified("reference point outside the variable box".into());
        }
        let e = match evaluate(p, x_u, x_l, self.delta_eq.unwrap_or(1e-4)) {
            Ok(e) => e,
            Err(err) => return Verification::Unverified(err.to_string()),
        };
        if e.upper_violations.iter().chain(&e.lower_violations).any(|v| *v < -REFERENCE_SLACK) {
            return Verification::Unverified("reference point violates a constraint".into());
        }
        let du = (e.upper_fitness - self.best_known_upper).abs();
        let dl = (e.lower_fitness - self.best_known_lower).abs();
        if du > VERIFY_TOLERANCE || dl > VERIFY_TOLERANCE {
            return Verification::Unverified(format!(
                "reference point gives ({:.5}, {:.5}), expected ({}, {})",
                e.upper_fitness, e.lower_fitness, self.best_known_upper, self.best_known_lower
            ));
        }
        Verification::Verified
    }

    /// One `list-problems` line.
    pub fn describe(&self) -> String {
        let p = &self.problem;
        let rho = self
            .rho_reference
            .map(|r| format!("{r:.2}"))
            .unwrap_or_else(|| "-".into());
        let status = match self.verify() {
            Verification::Verified => "verified".to_string(),
            Verification::Unverified(why) => format!("unverified ({why})"),
        };
        format!(
            "{}\tdim_u={}\tdim_l={}\tm_u={}\tm_l={}\tF_b={}\tf_b={}\trho={}\tdelta_eq={}\t{}",
            p.id,
            p.upper_dim,
            p.lower_dim,
            p.upper_constraint_count(),
            p.lower_constraint_count(),
            self.best_known_upper,
            self.best_known_lower,
            rho,
            self.delta_eq.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
            status
        )
    }
}

fn uniform(dim: usize, lo: f64, hi: f64) -> Bounds {
    Bounds::uniform(dim, lo, hi).expect("static bounds")
}

/// Lower bound given, upper bound left open.
fn nonneg(dim: usize) -> Bounds {
    uniform(dim, 0.0, crate::problem::DEFAULT_BOUND)
}

fn tp1() -> BenchmarkEntry {
    let problem = BilevelProblem::builder(
        "TP1",
        2,
        2,
        |x, y| (x[0] - 30.0).powi(2) + (x[1] - 20.0).powi(2) - 20.0 * y[0] + 20.0 * y[1],
        |x, y| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2),
    )
    // x0 + 2 x1 >= 30 and x0 + x1 <= 25 force x0 <= 20 and x1 >= 5, and with
    // x1 <= 15 the first also forces x0 >= 0.
    .upper_bounds(Bounds::new(vec![0.0, 5.0], vec![20.0, 15.0]).expect("static bounds"))
    .lower_bounds(uniform(2, 0.0, 10.0))
    .upper_inequality(|x, _| x[0] + 2.0 * x[1] - 30.0)
    .upper_inequality(|x, _| 25.0 - x[0] - x[1])
    .upper_inequality(|x, _| 15.0 - x[1])
    .build()
    .expect("TP1");
    BenchmarkEntry {
        problem,
        best_known_upper: 225.0,
        best_known_lower: 100.0,
        rho_reference: Some(0.91),
        reference_point: (vec![20.0, 5.0], vec![10.0, 5.0]),
        delta_eq: None,
        source: "CEC2014 TP1; x unbounded, tightened to the implied box [0, 20] x [5, 15]; 0 <= y <= 10",
    }
}

fn tp2_constraints(b: crate::problem::ProblemBuilder) -> crate::problem::ProblemBuilder {
    b.upper_bounds(uniform(2, 0.0, 50.0))
        .lower_bounds(uniform(2, -10.0, 20.0))
        .upper_inequality(|x, y| 40.0 - (x[0] + x[1] + y[0] - 2.0 * y[1]))
        .lower_inequality(|x, y| x[0] - 2.0 * y[0] - 10.0)
        .lower_inequality(|x, y| x[1] - 2.0 * y[1] - 10.0)
}

fn tp2_lower(x: &[f64], y: &[f64]) -> f64 {
    (y[0] - x[0] + 20.0).powi(2) + (y[1] - x[1] + 20.0).powi(2)
}

fn tp2() -> BenchmarkEntry {
    let problem = tp2_constraints(BilevelProblem::builder(
        "TP2",
        2,
        2,
        |x, y| 2.0 * x[0] + 2.0 * x[1] - 3.0 * y[0] - 3.0 * y[1] - 60.0,
        tp2_lower,
    ))
    .build()
    .expect("TP2");
    BenchmarkEntry {
        problem,
        best_known_upper: 0.0,
        best_known_lower: 100.0,
        rho_reference: Some(0.50),
        reference_point: (vec![0.0, 30.0], vec![-10.0, 10.0]),
        delta_eq: None,
        source: "CEC2014 TP2; 0 <= x <= 50, -10 <= y <= 20",
    }
}

fn tp3() -> BenchmarkEntry {
    let problem = BilevelProblem::builder(
        "TP3",
        2,
        2,
        |x, y| -x[0].powi(2) - 3.0 * x[1].powi(2) - 4.0 * y[0] + y[1].powi(2),
        |x, y| 2.0 * x[0].powi(2) + y[0].powi(2) - 5.0 * y[1],
    )
    // x >= 0 with the upper constraint confines x to [0, 2]^2; on that box the
    // two lower constraints together give y0 <= 5.2 and y1 <= 3.4
    .upper_bounds(uniform(2, 0.0, 2.0))
    .lower_bounds(uniform(2, 0.0, 6.0))
    .upper_inequality(|x, _| 4.0 - x[0].powi(2) - 2.0 * x[1])
    .lower_inequality(|x, y| x[0].powi(2) - 2.0 * x[0] + x[1].powi(2) - 2.0 * y[0] + y[1] + 3.0)
    .lower_inequality(|x, y| x[1] + 3.0 * y[0] - 4.0 * y[1] - 4.0)
    .build()
    .expect("TP3");
    BenchmarkEntry {
        problem,
        best_known_upper: -18.6787,
        best_known_lower: -1.0156,
        rho_reference: Some(0.51),
        reference_point: (vec![0.0, 2.0], vec![1.875, 0.90625]),
        delta_eq: None,
        source: "CEC2014 TP3; x, y >= 0 tightened to the implied boxes [0, 2]^2 and [0, 6]^2",
    }
}

fn tp4() -> BenchmarkEntry {
    let problem = BilevelProblem::builder(
        "TP4",
        2,
        3,
        |x, y| -8.0 * x[0] - 4.0 * x[1] + 4.0 * y[0] - 40.0 * y[1] - 4.0 * y[2],
        |x, y| x[0] + 2.0 * x[1] + y[0] + y[1] + 2.0 * y[2],
    )
    .upper_bounds(nonneg(2))
    .lower_bounds(nonneg(3))
    .lower_inequality(|_, y| 1.0 - y[1] - y[2] + y[0])
    .lower_inequality(|x, y| 1.0 - 2.0 * x[0] + y[0] - 2.0 * y[1] + 0.5 * y[2])
    .lower_inequality(|x, y| 1.0 - 2.0 * x[1] - 2.0 * y[0] + y[1] + 0.5 * y[2])
    .build()
    .expect("TP4");
    BenchmarkEntry {
        problem,
        best_known_upper: -29.2,
        best_known_lower: 3.2,
        rho_reference: Some(0.11),
        reference_point: (vec![0.0, 0.9], vec![0.0, 0.6, 0.4]),
        delta_eq: None,
        source: "CEC2014 TP4; x, y >= 0",
    }
}

fn tp5() -> BenchmarkEntry {
    // f = 0.5 y'Hy + b(x)'y with H = [[1,3],[3,10]], b(x) = [[-1,2],[3,-3]] x.
    // This sign of the linear term is the one that reproduces (-3.6, -2.0).
    let problem = BilevelProblem::builder(
        "TP5",
        2,
        2,
        |x, y| {
            0.1 * (x[0] * x[0] + x[1] * x[1]) - 3.0 * y[0] - 4.0 * y[1] + 0.5 * (y[0] * y[0] + y[1] * y[1])
        },
        |x, y| {
            let quad = y[0] * y[0] + 6.0 * y[0] * y[1] + 10.0 * y[1] * y[1];
            let b0 = -x[0] + 2.0 * x[1];
            let b1 = 3.0 * x[0] - 3.0 * x[1];
            0.5 * quad + b0 * y[0] + b1 * y[1]
        },
    )
    .lower_bounds(nonneg(2))
    .lower_inequality(|_, y| 2.0 + 0.333 * y[0] - y[1])
    .lower_inequality(|_, y| 2.0 - y[0] + 0.333 * y[1])
    .build()
    .expect("TP5");
    BenchmarkEntry {
        problem,
        best_known_upper: -3.6,
        best_known_lower: -2.0,
        rho_reference: Some(0.61),
        reference_point: (vec![2.0, 0.0], vec![2.0, 0.0]),
        delta_eq: None,
        source: "CEC2014 TP5; x unbounded, y >= 0; +b(x)'y sign",
    }
}

fn tp6() -> BenchmarkEntry {
    let problem = BilevelProblem::builder(
        "TP6",
        1,
        2,
        |x, y| (x[0] - 1.0).powi(2) + 2.0 * y[0] - 2.0 * x[0],
        |x, y| (2.0 * y[0] - 4.0).powi(2) + (2.0 * y[1] - 1.0).powi(2) + x[0] * y[0],
    )
    .upper_bounds(nonneg(1))
    .lower_bounds(nonneg(2))
    .lower_inequality(|x, y| 12.0 - 4.0 * x[0] - 5.0 * y[0] - 4.0 * y[1])
    .lower_inequality(|x, y| -4.0 - 4.0 * y[1] + 4.0 * x[0] + 5.0 * y[0])
    .lower_inequality(|x, y| 4.0 - 4.0 * x[0] + 4.0 * y[0] - 5.0 * y[1])
    .lower_inequality(|x, y| 4.0 - 4.0 * y[0] + 4.0 * x[0] - 5.0 * y[1])
    .build()
    .expect("TP6");
    BenchmarkEntry {
        problem,
        best_known_upper: -1.2091,
        best_known_lower: 7.6145,
        rho_reference: Some(0.04),
        // Interior of the (degenerate) feasible segment next to x = 17/9.
        reference_point: (vec![1.8888], vec![0.88888, 0.0]),
        delta_eq: None,
        source: "CEC2014 TP6; x, y >= 0",
    }
}

fn tp7_ratio(x: &[f64], y: &[f64]) -> f64 {
    (x[0] + y[0]) * (x[1] + y[1]) / (1.0 + x[0] * y[0] + x[1] * y[1])
}

fn tp7() -> BenchmarkEntry {
    let problem = BilevelProblem::builder("TP7", 2, 2, |x, y| -tp7_ratio(x, y), tp7_ratio)
        .upper_bounds(nonneg(2))
        .lower_bounds(nonneg(2))
        .upper_inequality(|x, _| 100.0 - x[0] * x[0] - x[1] * x[1])
        .upper_inequality(|x, _| x[1] - x[0])
        .lower_inequality(|x, y| x[0] - y[0])
        .lower_inequality(|x, y| x[1] - y[1])
        .build()
        .expect("TP7");
    BenchmarkEntry {
        problem,
        best_known_upper: -1.96,
        best_known_lower: 1.96,
        rho_reference: Some(0.21),
        reference_point: (vec![7.0, 7.0], vec![7.0, 0.0]),
        delta_eq: None,
        source: "CEC2014 TP7; x, y >= 0, y <= x as lower constraints",
    }
}

fn tp8() -> BenchmarkEntry {
    let problem = tp2_constraints(BilevelProblem::builder(
        "TP8",
        2,
        2,
        |x, y| (2.0 * x[0] + 2.0 * x[1] - 3.0 * y[0] - 3.0 * y[1] - 60.0).abs(),
        tp2_lower,
    ))
    .build()
    .expect("TP8");
    BenchmarkEntry {
        problem,
        best_known_upper: 0.0,
        best_known_lower: 100.0,
        rho_reference: Some(0.61),
        reference_point: (vec![0.0, 30.0], vec![-10.0, 10.0]),
        delta_eq: None,
        source: "CEC2014 TP8; 0 <= x <= 50, -10 <= y <= 20",
    }
}

fn griewank_core(z: impl Iterator<Item = f64> + Clone) -> f64 {
    let sq: f64 = z.clone().map(|v| v * v).sum();
    let prod: f64 = z
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    1.0 + sq / 4000.0 - prod
}

fn tp9_10_upper(x: &[f64], y: &[f64]) -> f64 {
    x.iter().map(|v| (v - 1.0).abs()).sum::<f64>() + y.iter().map(|v| v.abs()).sum::<f64>()
}

/// Upper variables of TP9/TP10 get a finite box: with the default ±1e4 box
/// the exponential lower objective overflows to infinity.
const TP9_10_X_BOUND: f64 = 5.0;

fn tp9() -> BenchmarkEntry {
    let problem = BilevelProblem::builder("TP9", 10, 10, tp9_10_upper, |x, y| {
        let sx: f64 = x.iter().map(|v| v * v).sum();
        (griewank_core(y.iter().copied()) * sx).exp()
    })
    .upper_bounds(uniform(10, -TP9_10_X_BOUND, TP9_10_X_BOUND))
    .lower_bounds(uniform(10, -PI, PI))
    .build()
    .expect("TP9");
    BenchmarkEntry {
        problem,
        best_known_upper: 0.0,
        best_known_lower: 1.0,
        rho_reference: Some(1.00),
        reference_point: (vec![1.0; 10], vec![0.0; 10]),
        delta_eq: None,
        source: "CEC2014 TP9; -pi <= y <= pi, |x| <= 5",
    }
}

fn tp10() -> BenchmarkEntry {
    let problem = BilevelProblem::builder("TP10", 10, 10, tp9_10_upper, |x, y| {
        griewank_core(x.iter().zip(y).map(|(a, b)| a * b)).exp()
    })
    .upper_bounds(uniform(10, -TP9_10_X_BOUND, TP9_10_X_BOUND))
    .lower_bounds(uniform(10, -PI, PI))
    .build()
    .expect("TP10");
    BenchmarkEntry {
        problem,
        best_known_upper: 0.0,
        best_known_lower: 1.0,
        rho_reference: Some(1.00),
        reference_point: (vec![1.0; 10], vec![0.0; 10]),
        delta_eq: None,
        source: "CEC2014 TP10; -pi <= y <= pi, |x| <= 5",
    }
}

fn sq_builder(id: &str) -> crate::problem::ProblemBuilder {
    BilevelProblem::builder(
        id,
        1,
        1,
        |x, y| (x[0] - 1.0).powi(2) + y[0].powi(2),
        |x, y| (y[0] - x[0]).powi(2),
    )
    .upper_bounds(uniform(1, -5.0, 5.0))
    .lower_bounds(uniform(1, -5.0, 5.0))
}

/// min (x-1)^2 + y^2 with y = argmin (y-x)^2, so y = x and x = 1/2.
fn sq1() -> BenchmarkEntry {
    BenchmarkEntry {
        problem: sq_builder("SQ1").build().expect("SQ1"),
        best_known_upper: 0.5,
        best_known_lower: 0.0,
        rho_reference: None,
        reference_point: (vec![0.5], vec![0.5]),
        delta_eq: None,
        source: "analytic sanity problem",
    }
}

/// SQ1 with x >= 1: the optimum moves to the constraint boundary.
fn sq2() -> BenchmarkEntry {
    BenchmarkEntry {
        problem: sq_builder("SQ2").upper_inequality(|x, _| x[0] - 1.0).build().expect("SQ2"),
        best_known_upper: 1.0,
        best_known_lower: 0.0,
        rho_reference: None,
        reference_point: (vec![1.0], vec![1.0]),
        delta_eq: None,
        source: "analytic sanity problem",
    }
}

pub fn registry() -> &'static [BenchmarkEntry] {
    static REGISTRY: OnceLock<Vec<BenchmarkEntry>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        vec![
            tp1(),
            tp2(),
            tp3(),
            tp4(),
            tp5(),
            tp6(),
            tp7(),
            tp8(),
            tp9(),
            tp10(),
            sq1(),
            sq2(),
        ]
    })
}

pub fn available_ids() -> Vec<String> {
    registry().iter().map(|e| e.id().to_string()).collect()
}

pub fn get_problem(id: &str) -> Result<BenchmarkEntry> {
    registry()
        .iter()
        .find(|e| e.id() == id)
        .cloned()
        .ok_or_else(|| Error::UnknownProblem {
            id: id.to_string(),
            available: available_ids(),
        })
}

pub fn best_known(id: &str) -> Result<(f64, f64)> {
    let e = get_problem(id)?;
    Ok((e.best_known_upper, e.best_known_lower))
}

/// Bound and tolerance overrides for one problem.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOverride {
    pub delta_eq: Option<f64>,
    pub upper_lower: Option<Vec<f64>>,
    pub upper_upper: Option<Vec<f64>>,
    pub lower_lower: Option<Vec<f64>>,
    pub lower_upper: Option<Vec<f64>>,
}

/// Per-problem overrides, one TOML table per problem id:
///
/// ```toml
/// [TP6]
/// delta_eq = 1e-3
/// lower_upper = [10.0, 10.0]
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub problems: BTreeMap<String, ProblemOverride>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let problems: BTreeMap<String, ProblemOverride> =
            toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        let known = available_ids();
        if let Some(id) = problems.keys().find(|id| !known.contains(id)) {
            return Err(Error::Manifest(format!("unknown problem '{id}'")));
        }
        Ok(Self { problems })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Registry entry for `id` with this manifest's overrides applied.
    pub fn resolve(&self, id: &str) -> Result<BenchmarkEntry> {
        let mut entry = get_problem(id)?;
        let Some(o) = self.problems.get(id) else {
            return Ok(entry);
        };
        if let Some(d) = o.delta_eq {
            if !(d > 0.0) {
                return Err(Error::Manifest(format!("{id}: delta_eq must be positive, got {d}")));
            }
            entry.delta_eq = Some(d);
        }
        let p = &mut entry.problem;
        p.upper_bounds = merge_bounds(&p.upper_bounds, o.upper_lower.as_deref(), o.upper_upper.as_deref())
            .map_err(|e| Error::Manifest(format!("{id} upper bounds: {e}")))?;
        p.lower_bounds = merge_bounds(&p.lower_bounds, o.lower_lower.as_deref(), o.lower_upper.as_deref())
            .map_err(|e| Error::Manifest(format!("{id} lower bounds: {e}")))?;
        Ok(entry)
    }
}

fn merge_bounds(base: &Bounds, lo: Option<&[f64]>, hi: Option<&[f64]>) -> Result<Bounds> {
    for v in [lo, hi].into_iter().flatten() {
        if v.len() != base.len() {
            return Err(Error::DimensionMismatch {
                what: "bounds override",
                expected: base.len(),
                actual: v.len(),
            });
        }
    }
    Bounds::new(
        lo.unwrap_or(base.lower()).to_vec(),
        hi.unwrap_or(base.upper()).to_vec(),
    )
}

/// True when every explicit constraint at both levels holds.
pub fn jointly_feasible(problem: &BilevelProblem, x_u: &[f64], x_l: &[f64], delta: f64) -> Result<bool> {
    for g in problem.upper_inequalities.iter().chain(&problem.lower_inequalities) {
        if violation(g(x_u, x_l)) != 0.0 {
            return Ok(false);
        }
    }
    for h in problem.upper_equalities.iter().chain(&problem.lower_equalities) {
        if violation(equality_to_inequality(h(x_u, x_l), delta)?) != 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mean fraction of uniformly sampled joint points that satisfy every
/// explicit constraint, over `repeats` independent batches.
pub fn estimate_rho(problem: &BilevelProblem, sample_size: usize, repeats: usize, delta: f64, seed_value: u64) -> Result<f64> {
    if sample_size == 0 || repeats == 0 {
        return Err(Error::InvalidInput("sample size and repeats must be at least 1".into()));
    }
    let mut total = 0.0;
    for r in 0..repeats {
        let mut rng = seed::stream(seed_value, &[seed::TAG_RHO, seed::hash_id(&problem.id), r as u64]);
        let mut hits = 0usize;
        for _ in 0..sample_size {
            let x_u = sample_uniform(&problem.upper_bounds, &mut rng);
            let x_l = sample_uniform(&problem.lower_bounds, &mut rng);
            if jointly_feasible(problem, &x_u, &x_l, delta)? {
                hits += 1;
            }
        }
        total += hits as f64 / sample_size as f64;
    }
    Ok(total / repeats as f64)
}

/// Draws a uniform point; exposed for callers that want their own sampler.
pub fn sample_joint<R: Rng + ?Sized>(problem: &BilevelProblem, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    (sample_uniform(&problem.upper_bounds, rng), sample_uniform(&problem.lower_bounds, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_overrides() {
        let m = Manifest::parse("[SQ1]\ndelta_eq = 0.01\nlower_upper = [2.0]\n").unwrap();
        let e = m.resolve("SQ1").unwrap();
        assert_eq!(e.delta_eq, Some(0.01));
        assert_eq!(e.problem.lower_bounds.upper(), &[2.0]);
        assert_eq!(e.problem.lower_bounds.lower(), &[-5.0]);
        assert_eq!(m.resolve("SQ2").unwrap().delta_eq, None);
        assert!(matches!(Manifest::parse("[TP99]\ndelta_eq = 1.0\n"), Err(Error::Manifest(_))));
        assert!(matches!(Manifest::parse("[SQ1]\nbogus = 1\n"), Err(Error::Manifest(_))));
        let m = Manifest::parse("[SQ1]\nlower_upper = [1.0, 2.0]\n").unwrap();
        assert!(m.resolve("SQ1").is_err());
        let m = Manifest::parse("[SQ1]\nlower_lower = [9.0]\n").unwrap();
        assert!(m.resolve("SQ1").is_err());
    }

    #[test]
    fn table_values() {
        let tp1 = get_problem("TP1").unwrap();
        assert_eq!((tp1.best_known_upper, tp1.best_known_lower, tp1.rho_reference), (225.0, 100.0, Some(0.91)));
        let tp6 = get_problem("TP6").unwrap();
        assert_eq!((tp6.best_known_upper, tp6.best_known_lower, tp6.rho_reference), (-1.2091, 7.6145, Some(0.04)));
        assert_eq!(best_known("TP3").unwrap(), (-18.6787, -1.0156));
        assert_eq!(best_known("TP10").unwrap(), (0.0, 1.0));
        assert_eq!(best_known("SQ1").unwrap(), (0.5, 0.0));
        assert_eq!(best_known("SQ2").unwrap(), (1.0, 0.0));
    }

    #[test]
    fn unknown_id_lists_available() {
        match get_problem("TP99") {
            Err(Error::UnknownProblem { id, available }) => {
                assert_eq!(id, "TP99");
                assert_eq!(available.len(), 12);
                assert!(available.contains(&"TP1".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ids_are_unique() {
        let mut ids = available_ids();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), registry().len());
    }

    #[test]
    fn every_entry_verifies_at_its_reference_point() {
        for e in registry() {
            assert_eq!(e.verify(), Verification::Verified, "{}", e.id());
        }
    }

    #[test]
    fn verification_catches_bad_reference() {
        let mut e = get_problem("TP1").unwrap();
        e.best_known_upper = 200.0;
        assert!(!e.verify().is_verified());
        e = get_problem("TP1").unwrap();
        e.reference_point.0 = vec![0.0, 0.0];
        assert!(!e.verify().is_verified());
    }

    #[test]
    fn rho_edge_cases() {
        let free = sq1().problem;
        assert_eq!(estimate_rho(&free, 1000, 2, 1e-4, 1).unwrap(), 1.0);

        let half = BilevelProblem::builder("half", 1, 0, |_, _| 0.0, |_, _| 0.0)
            .upper_bounds(uniform(1, -1.0, 1.0))
            .lower_bounds(uniform(0, 0.0, 0.0))
            .upper_inequality(|x, _| x[0])
            .build()
            .unwrap();
        let rho = estimate_rho(&half, 10_000, 5, 1e-4, 3).unwrap();
        assert!((rho - 0.5).abs() <= 0.03, "{rho}");
        assert_eq!(rho, estimate_rho(&half, 10_000, 5, 1e-4, 3).unwrap());
        assert!(estimate_rho(&half, 0, 5, 1e-4, 3).is_err());
    }

    #[test]
    fn dropping_a_constraint_never_lowers_rho() {
        let two = BilevelProblem::builder("two", 2, 0, |_, _| 0.0, |_, _| 0.0)
            .upper_bounds(uniform(2, -1.0, 1.0))
            .lower_bounds(uniform(0, 0.0, 0.0))
            .upper_inequality(|x, _| x[0])
            .upper_inequality(|x, _| 0.5 - x[1])
            .build()
            .unwrap();
        let mut one = two.clone();
        one.upper_inequalities.pop();
        let r2 = estimate_rho(&two, 5000, 3, 1e-4, 9).unwrap();
        let r1 = estimate_rho(&one, 5000, 3, 1e-4, 9).unwrap();
        assert!(r1 >= r2);
        assert!((0.0..=1.0).contains(&r1) && (0.0..=1.0).contains(&r2));
    }
}
