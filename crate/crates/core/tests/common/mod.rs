#![allow(dead_code)]

use std::io::Write;

use bichea::{Candidate, FitnessKey};

/// One verdict line, written past the test harness's output capture.
pub fn verdict(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] criterion {criterion}: {detail}");
}

pub fn cand(tag: usize, satisfied: usize, upper: f64, lower: f64) -> Candidate {
    Candidate {
        x_u: vec![tag as f64],
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

/// Midrank of each value by counting, without sorting.
fn naive_midranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|x| {
            let less = pooled.iter().filter(|y| *y < x).count() as f64;
            let equal = pooled.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-tailed rank-sum p-value by enumerating every size-`a.len()` subset.
pub fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = naive_midranks(&pooled);
    let (n, total) = (a.len(), pooled.len());
    let mu = n as f64 * (total as f64 + 1.0) / 2.0;
    let observed = (ranks[..n].iter().sum::<f64>() - mu).abs();
    let (mut extreme, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let w: f64 = (0..total).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        all += 1;
        // rank sums are multiples of one half, so this comparison is exact
        if (w - mu).abs() >= observed {
            extreme += 1;
        }
    }
    extreme as f64 / all as f64
}

/// Top-`k` by repeated minimum extraction: most satisfied constraints,
/// then lowest key, then earliest position.
pub fn top_k_oracle(population: &[Candidate], key: FitnessKey, k: usize) -> Vec<Candidate> {
    let mut left: Vec<(usize, &Candidate)> = population.iter().enumerate().collect();
    let mut out = Vec::new();
    while out.len() < k && !left.is_empty() {
        let mut best = 0;
        for j in 1..left.len() {
            let (ij, cj) = left[j];
            let (ib, cb) = left[best];
            let (sj, sb) = (cj.satisfied_total(), cb.satisfied_total());
            let (kj, kb) = (key.of(cj), key.of(cb));
            if sj > sb || (sj == sb && (kj < kb || (kj == kb && ij < ib))) {
                best = j;
            }
        }
        out.push(left.remove(best).1.clone());
    }
    out
}
