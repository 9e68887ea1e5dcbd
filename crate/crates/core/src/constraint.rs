//! Infeasibility measures and the feasibility-first (Deb) comparator.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Candidate;

/// Which objective breaks ties between equally feasible candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitnessKey {
    /// Upper-level objective `F`.
    Upper,
    /// Lower-level objective `f`.
    Lower,
}

impl FitnessKey {
    pub fn of(self, c: &Candidate) -> f64 {
        match self {
            FitnessKey::Upper => c.upper_fitness,
            FitnessKey::Lower => c.lower_fitness,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FitnessKey::Upper => "F",
            FitnessKey::Lower => "f",
        }
    }
}

/// Mapped violations of one constraint level.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationSummary {
    pub per_constraint: Vec<f64>,
    pub total_error: f64,
    pub satisfied_count: usize,
}

impl ViolationSummary {
    /// Builds a summary from raw `g >= 0` values.
    pub fn from_raw(raw: &[f64]) -> Self {
        let per_constraint: Vec<f64> = raw.iter().copied().map(violation).collect();
        let total_error = per_constraint.iter().map(|v| v.abs()).sum();
        let satisfied_count = per_constraint.iter().filter(|v| **v == 0.0).count();
        Self {
            per_constraint,
            total_error,
            satisfied_count,
        }
    }
}

/// Maps `h = 0` onto `delta - |h| >= 0`.
pub fn equality_to_inequality(h_value: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("equality tolerance must be positive, got {delta}")));
    }
    Ok(delta - h_value.abs())
}

/// `g` when violated (`g < 0`), else zero.
pub fn violation(g_value: f64) -> f64 {
    if g_value < 0.0 {
        g_value
    } else {
        0.0
    }
}

/// Sum of absolute violations. Entries must already be `<= 0`.
pub fn total_error(violations: &[f64]) -> Result<f64> {
    if let Some(v) = violations.iter().find(|v| **v > 0.0) {
        return Err(Error::InvalidInput(format!(
            "violation entries must be <= 0, found {v}"
        )));
    }
    Ok(violations.iter().map(|v| v.abs()).sum())
}

/// More satisfied constraints (both levels together) first, then lower key.
/// `Less` means `a` ranks ahead of `b`.
pub fn deb_compare(a: &Candidate, b: &Candidate, key: FitnessKey) -> Ordering {
    b.satisfied_total()
        .cmp(&a.satisfied_total())
        .then_with(|| key.of(a).total_cmp(&key.of(b)))
}

/// Stable Deb sort in place.
pub fn deb_sort(population: &mut [Candidate], key: FitnessKey) {
    population.sort_by(|a, b| deb_compare(a, b, key));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cand(satisfied: usize, upper: f64, lower: f64) -> Candidate {
        Candidate {
            x_u: vec![],
            x_l: vec![],
            upper_fitness: upper,
            lower_fitness: lower,
            upper_violations: vec![],
            lower_violations: vec![],
            satisfied_upper: satisfied,
            satisfied_lower: 0,
            error_upper: 0.0,
            error_lower: 0.0,
        }
    }

    #[test]
    fn equality_mapping() {
        assert_eq!(equality_to_inequality(0.0, 1e-4).unwrap(), 1e-4);
        assert!((equality_to_inequality(0.5, 1e-4).unwrap() + 0.4999).abs() < 1e-15);
        assert_eq!(equality_to_inequality(-1e-4, 1e-4).unwrap(), 0.0);
        assert!(equality_to_inequality(1.0, 0.0).is_err());
        assert!(equality_to_inequality(1.0, -1.0).is_err());
    }

    #[test]
    fn violation_branches() {
        assert_eq!(violation(-2.0), -2.0);
        assert_eq!(violation(3.0), 0.0);
        assert_eq!(violation(0.0), 0.0);
    }

    #[test]
    fn error_sums() {
        assert_eq!(total_error(&[-2.0, 0.0, -0.5]).unwrap(), 2.5);
        assert_eq!(total_error(&[]).unwrap(), 0.0);
        assert_eq!(total_error(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(total_error(&[-1.0, 0.5]).is_err());
    }

    #[test]
    fn summary_from_raw() {
        let s = ViolationSummary::from_raw(&[1.0, -2.0, 0.0, -0.5]);
        assert_eq!(s.per_constraint, vec![0.0, -2.0, 0.0, -0.5]);
        assert_eq!(s.total_error, 2.5);
        assert_eq!(s.satisfied_count, 2);
    }

    #[test]
    fn deb_ordering() {
        let a = cand(3, 10.0, 0.0);
        let b = cand(2, 1.0, 0.0);
        assert_eq!(deb_compare(&a, &b, FitnessKey::Upper), Ordering::Less);
        let a = cand(3, 1.0, 0.0);
        let b = cand(3, 2.0, 0.0);
        assert_eq!(deb_compare(&a, &b, FitnessKey::Upper), Ordering::Less);
        assert_eq!(deb_compare(&a, &a, FitnessKey::Upper), Ordering::Equal);
        let a = cand(1, 0.0, 5.0);
        let b = cand(1, 9.0, 2.0);
        assert_eq!(deb_compare(&a, &b, FitnessKey::Lower), Ordering::Greater);
    }

    proptest! {
        #[test]
        fn deb_is_a_total_preorder(
            xs in proptest::collection::vec((0usize..4, -3i32..3, -3i32..3), 3)
        ) {
            let c: Vec<Candidate> = xs.iter().map(|(s, u, l)| cand(*s, *u as f64, *l as f64)).collect();
            for key in [FitnessKey::Upper, FitnessKey::Lower] {
                let le = |i: usize, j: usize| deb_compare(&c[i], &c[j], key) != Ordering::Greater;
                for i in 0..3 {
                    for j in 0..3 {
                        prop_assert!(le(i, j) || le(j, i));
                        prop_assert_eq!(deb_compare(&c[i], &c[j], key), deb_compare(&c[j], &c[i], key).reverse());
                        for k in 0..3 {
                            if le(i, j) && le(j, k) {
                                prop_assert!(le(i, k));
                            }
                        }
                    }
                }
            }
        }

        #[test]
        fn total_error_permutation_invariant(
            mut v in proptest::collection::vec(-10.0f64..=0.0, 0..8),
            seed in any::<u64>()
        ) {
            let before = total_error(&v).unwrap();
            let n = v.len();
            if n > 1 {
                v.rotate_left((seed as usize) % n);
                v.swap(0, n - 1);
            }
            let after = total_error(&v).unwrap();
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
        }

        #[test]
        fn equality_sign_matches_tolerance(h in -1.0f64..1.0, delta in 1e-6f64..0.5) {
            let g = equality_to_inequality(h, delta).unwrap();
            prop_assert_eq!(g >= 0.0, h.abs() <= delta);
        }
    }
}
