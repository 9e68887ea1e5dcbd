use indexmap::IndexMap;

use bichea::benchmarks::get_problem;
use bichea::stats::{
    cross_strategy_matrix, run_experiment, run_experiment_on, sector_samples, t_sweep, ExperimentConfig,
    DEFAULT_ALPHA,
};
use bichea::{Error, Profile};

fn quick(runs: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        runs,
        ..ExperimentConfig::default()
    };
    cfg.run.generations = 120;
    cfg.run.population_size = 40;
    cfg
}

#[test]
fn single_run_has_zero_variance() {
    let report = run_experiment(&["SQ1".to_string(), "TP9".to_string()], &quick(1)).unwrap();
    for s in report.per_problem.values() {
        assert_eq!(s.runs.len(), 1);
        assert_eq!((s.var_upper, s.var_lower), (0.0, 0.0));
    }
    assert!(report.reference_rows.iter().all(|r| r.problem == "TP9"));
    assert_eq!(report.reference_rows.len(), 6);
}

#[test]
fn runs_are_independent_of_scheduling() {
    let mut one = quick(4);
    one.jobs = 1;
    let mut two = quick(4);
    two.jobs = 2;
    let a = run_experiment(&["SQ2".to_string()], &one).unwrap();
    let b = run_experiment(&["SQ2".to_string()], &two).unwrap();
    assert_eq!(a.per_problem, b.per_problem);
    let seeds: Vec<u64> = a.per_problem["SQ2"].runs.iter().map(|r| r.seed).collect();
    let mut unique = seeds.clone();
    unique.dedup();
    assert_eq!(unique.len(), 4);
}

#[test]
fn unverified_problems_are_refused() {
    let mut broken = get_problem("SQ1").unwrap();
    broken.reference_point = (vec![1.0], vec![1.0]);
    match run_experiment_on(&[broken], &quick(1)) {
        Err(Error::Unverified { id, reason }) => {
            assert_eq!(id, "SQ1");
            assert!(reason.contains("reference point"), "{reason}");
        }
        other => panic!("expected refusal, got {other:?}"),
    }
    assert!(matches!(
        run_experiment(&["TP99".to_string()], &quick(1)),
        Err(Error::UnknownProblem { .. })
    ));
    assert!(run_experiment(&["SQ1".to_string()], &quick(0)).is_err());
}

#[test]
fn sq1_sweep_is_insensitive_to_threshold() {
    let entries = vec![get_problem("SQ1").unwrap()];
    let mut cfg = quick(2);
    cfg.run.generations = 200;
    let rows = t_sweep(&entries, &[1, 2, 4], &cfg).unwrap();
    assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), vec![1, 2, 4]);
    for r in &rows {
        assert!(r.quality >= 0.0 && r.quality <= 0.01, "T={} quality {}", r.t, r.quality);
    }
    assert!(t_sweep(&entries, &[], &cfg).is_err());
}

#[test]
fn sector_matrix_from_both_profiles() {
    let mut opt = quick(3);
    opt.run.generations = 40;
    let mut pess = opt.clone();
    pess.run.profile = Profile::Pessimistic;
    let ids = ["SQ1".to_string()];
    let a = run_experiment(&ids, &opt).unwrap();
    let b = run_experiment(&ids, &pess).unwrap();
    let samples = sector_samples(&[&a, &b], true).unwrap();
    let labels: Vec<&str> = samples.keys().map(String::as_str).collect();
    assert_eq!(labels, ["EO_F", "O_F", "O_f", "EO_f", "EP_F", "P_F", "P_f", "EP_f"]);
    let m = cross_strategy_matrix(&samples, DEFAULT_ALPHA).unwrap();
    assert_eq!(m.cells.len(), 8);
    for i in 0..8 {
        assert!(m.cells[i][i].is_empty());
        for j in 0..8 {
            assert_eq!(m.cells[i][j], m.cells[j][i]);
        }
    }
    // the same report twice puts one strategy in two places
    assert!(sector_samples(&[&a, &a], true).is_err());
}

#[test]
fn shifted_fixture_flags_only_that_problem() {
    let base: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
    let shifted: Vec<f64> = base.iter().map(|x| x + 10.0).collect();
    let mut results: IndexMap<String, IndexMap<String, Vec<f64>>> = IndexMap::new();
    for (name, tp1) in [("A", &shifted), ("B", &base)] {
        let mut per = IndexMap::new();
        per.insert("TP1".to_string(), tp1.clone());
        per.insert("TP2".to_string(), base.clone());
        per.insert("TP3".to_string(), base.iter().rev().copied().collect());
        results.insert(name.to_string(), per);
    }
    let m = cross_strategy_matrix(&results, DEFAULT_ALPHA).unwrap();
    assert_eq!(m.cells[0][1], vec!["TP1".to_string()]);
    assert_eq!(m.cells[1][0], vec!["TP1".to_string()]);
}
