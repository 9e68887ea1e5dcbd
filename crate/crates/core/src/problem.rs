//! Bilevel problem model: variable boxes, problem callables, and the
//! evaluated chromosome representation shared by every other module.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{equality_to_inequality, total_error, violation};
use crate::error::{Error, Result};

/// Bound used for any variable whose range the problem leaves open.
pub const DEFAULT_BOUND: f64 = 10_000.0;

/// A function of the joint point `(x_u, x_l)`.
pub type LevelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Per-variable box `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                what: "bounds upper vs lower",
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidInput(format!(
                    "bounds for variable {i} are not an interval: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Same interval on every coordinate.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    /// `±DEFAULT_BOUND` on every coordinate.
    pub fn unspecified(dim: usize) -> Self {
        Self {
            lower: vec![-DEFAULT_BOUND; dim],
            upper: vec![DEFAULT_BOUND; dim],
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// A single-objective bilevel problem.
///
/// Inequalities follow the `g(x_u, x_l) >= 0` convention and equalities
/// `h(x_u, x_l) = 0`. Both objectives are minimized.
#[derive(Clone)]
pub struct BilevelProblem {
    pub id: String,
    pub upper_dim: usize,
    pub lower_dim: usize,
    pub upper_objective: LevelFn,
    pub lower_objective: LevelFn,
    pub upper_inequalities: Vec<LevelFn>,
    pub upper_equalities: Vec<LevelFn>,
    pub lower_inequalities: Vec<LevelFn>,
    pub lower_equalities: Vec<LevelFn>,
    pub upper_bounds: Bounds,
    pub lower_bounds: Bounds,
}

impl fmt::Debug for BilevelProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BilevelProblem")
            .field("id", &self.id)
            .field("upper_dim", &self.upper_dim)
            .field("lower_dim", &self.lower_dim)
            .field("upper_constraints", &self.upper_constraint_count())
            .field("lower_constraints", &self.lower_constraint_count())
            .field("upper_bounds", &self.upper_bounds)
            .field("lower_bounds", &self.lower_bounds)
            .finish()
    }
}

impl BilevelProblem {
    pub fn builder<F, G>(id: &str, upper_dim: usize, lower_dim: usize, upper: F, lower: G) -> ProblemBuilder
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        ProblemBuilder {
            problem: BilevelProblem {
                id: id.to_string(),
                upper_dim,
                lower_dim,
                upper_objective: Arc::new(upper),
                lower_objective: Arc::new(lower),
                upper_inequalities: Vec::new(),
                upper_equalities: Vec::new(),
                lower_inequalities: Vec::new(),
                lower_equalities: Vec::new(),
                upper_bounds: Bounds::unspecified(upper_dim),
                lower_bounds: Bounds::unspecified(lower_dim),
            },
        }
    }

    /// `m_u`: explicit upper-level constraints (inequalities then equalities).
    pub fn upper_constraint_count(&self) -> usize {
        self.upper_inequalities.len() + self.upper_equalities.len()
    }

    /// `m_l`: explicit lower-level constraints.
    pub fn lower_constraint_count(&self) -> usize {
        self.lower_inequalities.len() + self.lower_equalities.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.upper_constraint_count() + self.lower_constraint_count()
    }
}

pub struct ProblemBuilder {
    problem: BilevelProblem,
}

impl ProblemBuilder {
    pub fn upper_bounds(mut self, bounds: Bounds) -> Self {
        self.problem.upper_bounds = bounds;
        self
    }

    pub fn lower_bounds(mut self, bounds: Bounds) -> Self {
        self.problem.lower_bounds = bounds;
        self
    }

    pub fn upper_inequality(mut self, g: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.problem.upper_inequalities.push(Arc::new(g));
        self
    }

    pub fn upper_equality(mut self, h: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.problem.upper_equalities.push(Arc::new(h));
        self
    }

    pub fn lower_inequality(mut self, g: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.problem.lower_inequalities.push(Arc::new(g));
        self
    }

    pub fn lower_equality(mut self, h: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.problem.lower_equalities.push(Arc::new(h));
        self
    }

    pub fn build(self) -> Result<BilevelProblem> {
        let p = self.problem;
        if p.upper_bounds.len() != p.upper_dim {
            return Err(Error::DimensionMismatch {
                what: "upper bounds",
                expected: p.upper_dim,
                actual: p.upper_bounds.len(),
            });
        }
        if p.lower_bounds.len() != p.lower_dim {
            return Err(Error::DimensionMismatch {
                what: "lower bounds",
                expected: p.lower_dim,
                actual: p.lower_bounds.len(),
            });
        }
        Ok(p)
    }
}

/// Objective values and mapped constraint violations of one point.
///
/// Violation entries are already passed through the equality mapping and
/// the `min(g, 0)` rule, so every entry is `<= 0` and `0` means satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub upper_fitness: f64,
    pub lower_fitness: f64,
    pub upper_violations: Vec<f64>,
    pub lower_violations: Vec<f64>,
}

/// Evaluates objectives and every constraint of `problem` at `(x_u, x_l)`.
pub fn evaluate(problem: &BilevelProblem, x_u: &[f64], x_l: &[f64], delta: f64) -> Result<Evaluation> {
    if x_u.len() != problem.upper_dim {
        return Err(Error::DimensionMismatch {
            what: "x_u",
            expected: problem.upper_dim,
            actual: x_u.len(),
        });
    }
    if x_l.len() != problem.lower_dim {
        return Err(Error::DimensionMismatch {
            what: "x_l",
            expected: problem.lower_dim,
            actual: x_l.len(),
        });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("equality tolerance must be positive, got {delta}")));
    }

    let finite = |what: &str, v: f64| -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                problem: problem.id.clone(),
                what: what.to_string(),
                x_u: x_u.to_vec(),
                x_l: x_l.to_vec(),
            })
        }
    };

    let upper_fitness = finite("upper objective", (problem.upper_objective)(x_u, x_l))?;
    let lower_fitness = finite("lower objective", (problem.lower_objective)(x_u, x_l))?;

    let level = |name: &str, ineq: &[LevelFn], eq: &[LevelFn]| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ineq.len() + eq.len());
        for (i, g) in ineq.iter().enumerate() {
            let v = finite(&format!("{name} inequality {i}"), g(x_u, x_l))?;
            out.push(violation(v));
        }
        for (j, h) in eq.iter().enumerate() {
            let v = finite(&format!("{name} equality {j}"), h(x_u, x_l))?;
            out.push(violation(equality_to_inequality(v, delta)?));
        }
        Ok(out)
    };

    Ok(Evaluation {
        upper_fitness,
        lower_fitness,
        upper_violations: level("upper", &problem.upper_inequalities, &problem.upper_equalities)?,
        lower_violations: level("lower", &problem.lower_inequalities, &problem.lower_equalities)?,
    })
}

/// One chromosome: both variable blocks plus its cached evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x_u: Vec<f64>,
    pub x_l: Vec<f64>,
    pub upper_fitness: f64,
    pub lower_fitness: f64,
    pub upper_violations: Vec<f64>,
    pub lower_violations: Vec<f64>,
    pub satisfied_upper: usize,
    pub satisfied_lower: usize,
    pub error_upper: f64,
    pub error_lower: f64,
}

impl Candidate {
    pub fn from_evaluation(x_u: Vec<f64>, x_l: Vec<f64>, eval: Evaluation) -> Self {
        let satisfied = |v: &[f64]| v.iter().filter(|e| **e == 0.0).count();
        // Entries are <= 0 by construction, so total_error cannot fail here.
        let error = |v: &[f64]| v.iter().map(|e| e.abs()).sum::<f64>();
        Self {
            satisfied_upper: satisfied(&eval.upper_violations),
            satisfied_lower: satisfied(&eval.lower_violations),
            error_upper: error(&eval.upper_violations),
            error_lower: error(&eval.lower_violations),
            x_u,
            x_l,
            upper_fitness: eval.upper_fitness,
            lower_fitness: eval.lower_fitness,
            upper_violations: eval.upper_violations,
            lower_violations: eval.lower_violations,
        }
    }

    pub fn satisfied_total(&self) -> usize {
        self.satisfied_upper + self.satisfied_lower
    }

    pub fn total_error(&self) -> f64 {
        self.error_upper + self.error_lower
    }

    pub fn is_feasible(&self) -> bool {
        self.error_upper == 0.0 && self.error_lower == 0.0
    }

    pub fn is_lower_feasible(&self) -> bool {
        self.error_lower == 0.0
    }

    /// True when every constraint `other` satisfies is also satisfied here.
    pub fn satisfies_all_of(&self, other: &Candidate) -> bool {
        let covers = |mine: &[f64], theirs: &[f64]| {
            mine.iter().zip(theirs).all(|(m, t)| *t != 0.0 || *m == 0.0)
        };
        covers(&self.upper_violations, &other.upper_violations)
            && covers(&self.lower_violations, &other.lower_violations)
    }

    /// Concatenated `[x_u; x_l]`.
    pub fn joint(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x_u.len() + self.x_l.len());
        v.extend_from_slice(&self.x_u);
        v.extend_from_slice(&self.x_l);
        v
    }

    /// Recomputes the summary fields from the violation vectors.
    pub fn summary_consistent(&self) -> bool {
        let check = |v: &[f64], sat: usize, err: f64| {
            v.iter().filter(|e| **e == 0.0).count() == sat
                && total_error(v).map(|e| e == err).unwrap_or(false)
        };
        check(&self.upper_violations, self.satisfied_upper, self.error_upper)
            && check(&self.lower_violations, self.satisfied_lower, self.error_lower)
    }
}

/// Objective/constraint evaluator that counts every call.
pub struct Evaluator<'a> {
    problem: &'a BilevelProblem,
    delta_eq: f64,
    count: AtomicU64,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a BilevelProblem, delta_eq: f64) -> Result<Self> {
        if !(delta_eq > 0.0) {
            return Err(Error::InvalidInput(format!("delta_eq must be positive, got {delta_eq}")));
        }
        Ok(Self {
            problem,
            delta_eq,
            count: AtomicU64::new(0),
        })
    }

    pub fn problem(&self) -> &'a BilevelProblem {
        self.problem
    }

    pub fn candidate(&self, x_u: Vec<f64>, x_l: Vec<f64>) -> Result<Candidate> {
        self.count.fetch_add(1, Ordering::Relaxed);
        let eval = evaluate(self.problem, &x_u, &x_l, self.delta_eq)?;
        Ok(Candidate::from_evaluation(x_u, x_l, eval))
    }

    /// Evaluates a joint vector `[x_u; x_l]`.
    pub fn joint(&self, x: &[f64]) -> Result<Candidate> {
        let (u, l) = x.split_at(self.problem.upper_dim);
        self.candidate(u.to_vec(), l.to_vec())
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// Uniform sample inside `bounds`.
pub fn sample_uniform<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> Vec<f64> {
    bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(&lo, &hi)| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
        .collect()
}

/// Projects `x` onto the box.
pub fn clamp(x: &[f64], bounds: &Bounds) -> Result<Vec<f64>> {
    if x.len() != bounds.len() {
        return Err(Error::DimensionMismatch {
            what: "clamp",
            expected: bounds.len(),
            actual: x.len(),
        });
    }
    Ok(x.iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    #[test]
    fn sq1_at_optimum() {
        let e = evaluate(&sq1(), &[0.5], &[0.5], 1e-4).unwrap();
        assert_eq!(e.upper_fitness, 0.5);
        assert_eq!(e.lower_fitness, 0.0);
        assert!(e.upper_violations.is_empty() && e.lower_violations.is_empty());
        let c = Candidate::from_evaluation(vec![0.5], vec![0.5], e);
        assert_eq!((c.satisfied_upper, c.satisfied_lower), (0, 0));
        assert!(c.is_feasible());
    }

    #[test]
    fn equality_at_zero_is_satisfied() {
        let p = BilevelProblem::builder("eq", 1, 1, |_, _| 0.0, |_, _| 0.0)
            .upper_equality(|u, _| u[0])
            .build()
            .unwrap();
        let c = Evaluator::new(&p, 1e-4).unwrap().candidate(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(c.upper_violations, vec![0.0]);
        assert_eq!(c.satisfied_upper, 1);
        let c = Evaluator::new(&p, 1e-4).unwrap().candidate(vec![0.5], vec![0.0]).unwrap();
        assert!((c.upper_violations[0] + 0.4999).abs() < 1e-12);
        assert_eq!(c.satisfied_upper, 0);
    }

    #[test]
    fn dimension_and_numeric_errors() {
        let p = sq1();
        assert!(matches!(
            evaluate(&p, &[0.5, 1.0], &[0.5], 1e-4),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = BilevelProblem::builder("nan", 1, 1, |u, _| u[0].ln(), |_, _| 0.0)
            .build()
            .unwrap();
        match evaluate(&bad, &[-1.0], &[2.0], 1e-4) {
            Err(Error::NonFinite { x_u, x_l, .. }) => {
                assert_eq!(x_u, vec![-1.0]);
                assert_eq!(x_l, vec![2.0]);
            }
            other => panic!("expected numeric error, got {other:?}"),
        }
        assert!(evaluate(&p, &[0.5], &[0.5], 0.0).is_err());
    }

    #[test]
    fn evaluation_is_bit_identical() {
        let p = sq1();
        let a = evaluate(&p, &[0.123456789], &[-3.3], 1e-4).unwrap();
        let b = evaluate(&p, &[0.123456789], &[-3.3], 1e-4).unwrap();
        assert_eq!(a.upper_fitness.to_bits(), b.upper_fitness.to_bits());
        assert_eq!(a.lower_fitness.to_bits(), b.lower_fitness.to_bits());
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(Bounds::new(vec![2.0], vec![1.0]).is_err());
        let b = Bounds::unspecified(3);
        assert_eq!(b.lower(), &[-10_000.0; 3]);
        assert_eq!(b.upper(), &[10_000.0; 3]);
    }

    #[test]
    fn sampling() {
        let b = Bounds::uniform(1, 3.0, 3.0).unwrap();
        assert_eq!(sample_uniform(&b, &mut ChaCha8Rng::seed_from_u64(1)), vec![3.0]);

        let b = Bounds::uniform(2, 0.0, 1.0).unwrap();
        let x = sample_uniform(&b, &mut ChaCha8Rng::seed_from_u64(9));
        let y = sample_uniform(&b, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(x, y);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let s = sample_uniform(&b, &mut rng);
            assert!(b.contains(&s));
            sum[0] += s[0];
            sum[1] += s[1];
        }
        for s in sum {
            assert!((s / n as f64 - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn clamping() {
        let unit = Bounds::uniform(1, 0.0, 1.0).unwrap();
        assert_eq!(clamp(&[5.0], &unit).unwrap(), vec![1.0]);
        assert_eq!(clamp(&[0.5], &unit).unwrap(), vec![0.5]);
        let b = Bounds::new(vec![0.0, 0.0], vec![1.0, 5.0]).unwrap();
        assert_eq!(clamp(&[-3.0, 7.0], &b).unwrap(), vec![0.0, 5.0]);
        assert!(clamp(&[1.0], &b).is_err());
    }

    proptest::proptest! {
        #[test]
        fn clamp_is_idempotent(x in proptest::collection::vec(-100.0f64..100.0, 3)) {
            let b = Bounds::new(vec![-1.0, 0.0, 5.0], vec![1.0, 10.0, 6.0]).unwrap();
            let once = clamp(&x, &b).unwrap();
            proptest::prop_assert!(b.contains(&once));
            proptest::prop_assert_eq!(clamp(&once, &b).unwrap(), once);
        }
    }
}
