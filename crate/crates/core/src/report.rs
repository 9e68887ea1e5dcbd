//! Delimited table and JSON output. Every file is written to a temporary
//! sibling and renamed into place, so readers never see a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::benchmarks::BenchmarkEntry;
use crate::error::{Error, Result};
use crate::solver::RunResult;
use crate::stats::{deviation, variance_diff, wilcoxon_rank_sum, ExperimentReport, StrategyMatrix, TSweepRow, WilcoxonMode};

const COMPARED: [&str; 3] = ["Bayesian", "BLEAQ", "HPSOBLP"];

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(path, &bytes)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".into())
}

fn side_by_side(report: &ExperimentReport, kind: &str, id: &str) -> Vec<String> {
    COMPARED
        .iter()
        .flat_map(|alg| {
            let row = report
                .reference_rows
                .iter()
                .find(|r| r.problem == id && r.algorithm == *alg && r.kind == kind);
            [opt(row.and_then(|r| r.upper)), opt(row.and_then(|r| r.lower))]
        })
        .collect()
}

fn comparison_header() -> Vec<String> {
    let mut h = vec!["Prob".to_string(), "F".into(), "f".into()];
    for alg in COMPARED {
        h.push(format!("{alg} F"));
        h.push(format!("{alg} f"));
    }
    h
}

/// Best, average, variance and deviation tables plus the raw runs and the
/// effective configuration. Returns the written paths.
pub fn write_experiment(report: &ExperimentReport, entries: &[BenchmarkEntry], dir: &Path) -> Result<Vec<PathBuf>> {
    let header = comparison_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut best = Vec::new();
    let mut average = Vec::new();
    let mut variance = Vec::new();
    let mut dev = Vec::new();
    for (id, s) in &report.per_problem {
        let mut row = vec![id.clone(), num(s.best_upper), num(s.best_lower)];
        row.extend(side_by_side(report, "best", id));
        best.push(row);
        let mut row = vec![id.clone(), num(s.mean_upper), num(s.mean_lower)];
        row.extend(side_by_side(report, "average", id));
        average.push(row);
        variance.push(vec![id.clone(), num(s.best_upper), num(s.var_upper), num(s.best_lower), num(s.var_lower)]);
        if let Some(e) = entries.iter().find(|e| e.id() == id) {
            dev.push(vec![
                id.clone(),
                num(deviation(s.best_upper, e.best_known_upper)),
                num(deviation(s.best_lower, e.best_known_lower)),
            ]);
        }
    }
    let paths = [
        "best.csv",
        "average.csv",
        "variance.csv",
        "deviation.csv",
        "runs.json",
        "config.json",
    ]
    .map(|f| dir.join(f));
    write_table(&paths[0], &header, &best)?;
    write_table(&paths[1], &header, &average)?;
    write_table(&paths[2], &["Prob", "F", "Variance for F", "f", "Variance for f"], &variance)?;
    write_table(&paths[3], &["Prob", "|F_b - F|", "|f_b - f|"], &dev)?;
    write_json(&paths[4], report)?;
    write_json(&paths[5], &report.config)?;
    Ok(paths.to_vec())
}

/// Optimistic against pessimistic: best and average tables, rank-sum
/// p-values on final `F` and `f`, and the clamped variance differences.
pub fn write_profile_comparison(
    optimistic: &ExperimentReport,
    pessimistic: &ExperimentReport,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut best = Vec::new();
    let mut average = Vec::new();
    let mut dvar = Vec::new();
    let mut tests = Vec::new();
    for (id, o) in &optimistic.per_problem {
        let p = pessimistic
            .per_problem
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("{id} missing from the pessimistic report")))?;
        best.push(vec![id.clone(), num(o.best_upper), num(o.best_lower), num(p.best_upper), num(p.best_lower)]);
        average.push(vec![id.clone(), num(o.mean_upper), num(o.mean_lower), num(p.mean_upper), num(p.mean_lower)]);
        dvar.push(vec![
            id.clone(),
            num(variance_diff(o.var_upper, p.var_upper)),
            num(variance_diff(o.var_lower, p.var_lower)),
        ]);
        let finals = |s: &crate::stats::ProblemSummary, upper: bool| -> Vec<f64> {
            s.runs.iter().map(|r| if upper { r.upper } else { r.lower }).collect()
        };
        tests.push(vec![
            id.clone(),
            num(wilcoxon_rank_sum(&finals(o, true), &finals(p, true), WilcoxonMode::Auto)?),
            num(wilcoxon_rank_sum(&finals(o, false), &finals(p, false), WilcoxonMode::Auto)?),
        ]);
    }
    let header = ["Prob", "Optimistic F", "Optimistic f", "Pessimistic F", "Pessimistic f"];
    let paths = [
        "opt_vs_pess_best.csv",
        "opt_vs_pess_average.csv",
        "delta_var.csv",
        "opt_vs_pess_wilcoxon.csv",
    ]
    .map(|f| dir.join(f));
    write_table(&paths[0], &header, &best)?;
    write_table(&paths[1], &header, &average)?;
    write_table(&paths[2], &["Prob", "Δvar(F)", "Δvar(f)"], &dvar)?;
    write_table(&paths[3], &["Prob", "p(F)", "p(f)"], &tests)?;
    Ok(paths.to_vec())
}

pub fn write_matrix(path: &Path, matrix: &StrategyMatrix) -> Result<()> {
    let mut header = vec!["Conv."];
    header.extend(matrix.strategies.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = matrix
        .strategies
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut row = vec![name.clone()];
            row.extend((0..matrix.strategies.len()).map(|j| {
                if i == j {
                    "-".to_string()
                } else {
                    matrix.cells[i][j].join(", ")
                }
            }));
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

pub fn write_t_sweep(path: &Path, rows: &[TSweepRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.t.to_string(), r.problem.clone(), num(r.quality)])
        .collect();
    write_table(path, &["T", "Prob", "quality"], &rows)
}

/// Per-generation trace of the leading members and a JSON summary of the
/// final best. Wall time is left out so that reruns compare byte for byte.
pub fn write_run(result: &RunResult, id: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut rows = Vec::new();
    for g in &result.best_per_generation {
        for (rank, (u, l, e)) in g.best.iter().enumerate() {
            rows.push(vec![
                g.generation.to_string(),
                g.sector.to_string(),
                g.strategy.label().to_string(),
                (rank + 1).to_string(),
                num(*u),
                num(*l),
                num(*e),
                g.evaluations.to_string(),
            ]);
        }
    }
    let trace = dir.join(format!("{id}_trace.csv"));
    let summary = dir.join(format!("{id}_summary.json"));
    write_table(
        &trace,
        &["generation", "sector", "strategy", "rank", "F", "f", "e", "evaluations"],
        &rows,
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        problem: &'a str,
        best: &'a crate::problem::Candidate,
        evaluations: u64,
        generations: usize,
    }
    write_json(
        &summary,
        &Summary {
            problem: id,
            best: &result.best,
            evaluations: result.evaluation_count,
            generations: result.best_per_generation.len(),
        },
    )?;
    Ok(vec![trace, summary])
}
