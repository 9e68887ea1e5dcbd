mod common;

use proptest::prelude::*;

use bichea::solver::{merge_and_discard, sort_and_discard_by};
use bichea::stats::{deviation, variance_diff, DEVIATION_CAP};
use bichea::{wilcoxon_rank_sum, FitnessKey, WilcoxonMode};
use common::{brute_force_p, cand, top_k_oracle};

fn sample(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..6).prop_map(f64::from), 1..=max)
}

fn population() -> impl Strategy<Value = Vec<bichea::Candidate>> {
    prop::collection::vec((0usize..3, -3i32..3, -3i32..3), 1..=20).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (s, u, l))| cand(i, s, u as f64, l as f64))
            .collect()
    })
}

proptest! {
    #[test]
    fn rank_sum_is_symmetric_and_shift_invariant(a in sample(7), b in sample(7), shift in -50.0f64..50.0) {
        for mode in [WilcoxonMode::Exact, WilcoxonMode::Normal] {
            let p = wilcoxon_rank_sum(&a, &b, mode).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
            prop_assert_eq!(p, wilcoxon_rank_sum(&b, &a, mode).unwrap());
            let sa: Vec<f64> = a.iter().map(|x| x + shift.round()).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + shift.round()).collect();
            prop_assert_eq!(p, wilcoxon_rank_sum(&sa, &sb, mode).unwrap());
        }
    }

    #[test]
    fn exact_mode_matches_enumeration(a in sample(6), b in sample(6)) {
        prop_assert_eq!(wilcoxon_rank_sum(&a, &b, WilcoxonMode::Exact).unwrap(), brute_force_p(&a, &b));
    }

    #[test]
    fn auto_mode_picks_exact_for_small_samples(a in sample(8), b in sample(8)) {
        prop_assert_eq!(
            wilcoxon_rank_sum(&a, &b, WilcoxonMode::Auto).unwrap(),
            wilcoxon_rank_sum(&a, &b, WilcoxonMode::Exact).unwrap()
        );
    }

    #[test]
    fn truncation_matches_top_k(pop in population(), k in 1usize..=20, upper in any::<bool>()) {
        let key = if upper { FitnessKey::Upper } else { FitnessKey::Lower };
        prop_assert_eq!(sort_and_discard_by(pop.clone(), key, k), top_k_oracle(&pop, key, k));
    }

    #[test]
    fn merge_keeps_capacity_and_prefers_distinct(pop in population(), k in 1usize..=20) {
        let mut doubled = pop.clone();
        doubled.extend(pop.iter().cloned());
        let kept = merge_and_discard(doubled, FitnessKey::Upper, k);
        prop_assert_eq!(kept.len(), k.min(2 * pop.len()));
        let distinct = kept.len().min(pop.len());
        let mut tags: Vec<u64> = kept[..distinct].iter().map(|c| c.x_u[0].to_bits()).collect();
        tags.sort_unstable();
        tags.dedup();
        prop_assert_eq!(tags.len(), distinct);
    }

    #[test]
    fn deviation_is_capped(found in -1e3f64..1e3, known in -1e3f64..1e3) {
        let d = deviation(found, known);
        prop_assert!((0.0..=DEVIATION_CAP).contains(&d));
        prop_assert_eq!(d, deviation(known, found));
    }

    #[test]
    fn variance_diff_is_clamped(vo in 0.0f64..10.0, vp in 0.0f64..10.0) {
        let d = variance_diff(vo, vp);
        prop_assert!((-1.0..=1.0).contains(&d));
        prop_assert_eq!(d, -variance_diff(vp, vo));
    }
}

#[test]
fn normal_mode_tracks_exact_on_larger_samples() {
    let a: Vec<f64> = (0..9).map(|i| (i * 7 % 11) as f64).collect();
    let b: Vec<f64> = (0..9).map(|i| 4.0 + (i * 5 % 13) as f64).collect();
    let exact = wilcoxon_rank_sum(&a, &b, WilcoxonMode::Exact).unwrap();
    let normal = wilcoxon_rank_sum(&a, &b, WilcoxonMode::Normal).unwrap();
    assert!((exact - normal).abs() < 0.02, "{exact} vs {normal}");
}
