use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bichea::benchmarks::{registry, BenchmarkEntry, Manifest};
use bichea::report::{write_experiment, write_json, write_matrix, write_profile_comparison, write_run, write_t_sweep};
use bichea::stats::{cross_strategy_matrix, run_experiment_on, sector_samples, t_sweep, ExperimentConfig, DEFAULT_ALPHA, DEFAULT_RUNS};
use bichea::{estimate_rho, run, Profile, Result, RunConfig};

#[derive(Parser)]
#[command(name = "bichea", version, about = "Evolutionary bilevel optimization and its experiment harness")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "BICHEA_OUT", default_value = "bichea-out")]
    out: PathBuf,
    /// TOML file of per-problem bound and tolerance overrides.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem once and write its trace.
    Solve {
        id: String,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Repeated runs with best/average/variance tables.
    Experiment {
        /// Problem ids; all verified TP problems when omitted.
        ids: Vec<String>,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        batch: BatchFlags,
        #[arg(long, value_enum, default_value = "optimistic")]
        profile: ProfileArg,
    },
    /// Monte Carlo constraint strength.
    Rho {
        ids: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        delta_eq: Option<f64>,
    },
    /// Mean solution quality for several traversal thresholds.
    TSweep {
        ids: Vec<String>,
        /// Thresholds to try.
        #[arg(long = "T-values", value_delimiter = ',', default_values_t = [1u32, 2, 3, 4, 5])]
        t_values: Vec<u32>,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        batch: BatchFlags,
    },
    /// Rank-sum cross matrices between the sector strategies.
    Compare {
        ids: Vec<String>,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        batch: BatchFlags,
        #[arg(long, value_enum, default_value = "both")]
        profile: ProfileArg,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// One line per registered problem.
    ListProblems,
}

#[derive(Args, Clone)]
struct RunFlags {
    #[arg(long, default_value_t = 100)]
    pop: usize,
    #[arg(long, default_value_t = 500)]
    gens: usize,
    /// Traversal threshold.
    #[arg(long = "T", default_value_t = 2)]
    t: u32,
    /// Traversal coefficient.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.8)]
    crossover_rate: f64,
    #[arg(long, default_value_t = 2)]
    tournament: usize,
    /// Equality tolerance; per-problem values apply when omitted.
    #[arg(long)]
    delta_eq: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RunFlags {
    fn config(&self, profile: Profile) -> RunConfig {
        let mut c = RunConfig {
            population_size: self.pop,
            generations: self.gens,
            beta: self.beta,
            tournament_size: self.tournament,
            profile,
            master_seed: self.seed,
            ..RunConfig::default()
        };
        c.crossover.threshold = self.t;
        c.crossover.r = self.r;
        c.crossover.crossover_rate = self.crossover_rate;
        if let Some(d) = self.delta_eq {
            c.delta_eq = d;
        }
        c
    }
}

#[derive(Args, Clone)]
struct BatchFlags {
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    /// Parallel runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Optimistic,
    Pessimistic,
    Both,
}

impl ProfileArg {
    fn profiles(self) -> Vec<Profile> {
        match self {
            ProfileArg::Optimistic => vec![Profile::Optimistic],
            ProfileArg::Pessimistic => vec![Profile::Pessimistic],
            ProfileArg::Both => vec![Profile::Optimistic, Profile::Pessimistic],
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let manifest = match &cli.manifest {
        Some(p) => Manifest::load(p)?,
        None => Manifest::default(),
    };
    let out = cli.out.as_path();
    match &cli.command {
        Command::Solve { id, run: flags } => solve(&manifest.resolve(id)?, flags, out),
        Command::Experiment {
            ids,
            run: flags,
            batch,
            profile,
        } => {
            let entries = resolve(&manifest, ids)?;
            experiment(&entries, flags, batch, *profile, out)
        }
        Command::Rho {
            ids,
            samples,
            repeats,
            seed,
            delta_eq,
        } => {
            for e in resolve(&manifest, ids)? {
                let delta = delta_eq.or(e.delta_eq).unwrap_or(RunConfig::default().delta_eq);
                let rho = estimate_rho(&e.problem, *samples, *repeats, delta, *seed)?;
                let reference = e.rho_reference.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into());
                println!("{}\trho={rho:.4}\treference={reference}", e.id());
            }
            Ok(())
        }
        Command::TSweep {
            ids,
            t_values,
            run: flags,
            batch,
        } => {
            let entries = resolve(&manifest, ids)?;
            let cfg = experiment_config(flags, batch, Profile::Optimistic);
            let rows = t_sweep(&entries, t_values, &cfg)?;
            for r in &rows {
                println!("T={}\t{}\tquality={:.6}", r.t, r.problem, r.quality);
            }
            let path = out.join("t_sweep.csv");
            write_t_sweep(&path, &rows)?;
            write_json(&out.join("config.json"), &cfg)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Compare {
            ids,
            run: flags,
            batch,
            profile,
            alpha,
        } => {
            let entries = resolve(&manifest, ids)?;
            let mut reports = Vec::new();
            for p in profile.profiles() {
                let cfg = experiment_config(flags, batch, p);
                reports.push(run_experiment_on(&entries, &cfg)?);
            }
            let refs: Vec<_> = reports.iter().collect();
            for (upper, name) in [(true, "matrix_F.csv"), (false, "matrix_f.csv")] {
                let matrix = cross_strategy_matrix(&sector_samples(&refs, upper)?, *alpha)?;
                let path = out.join(name);
                write_matrix(&path, &matrix)?;
                println!("wrote {}", path.display());
            }
            for r in &reports {
                write_json(&out.join(format!("runs_{}.json", r.config.run.profile.label())), r)?;
            }
            Ok(())
        }
        Command::ListProblems => {
            for e in registry() {
                println!("{}", manifest.resolve(e.id())?.describe());
            }
            Ok(())
        }
    }
}

/// Entries for `ids`, or every verified TP problem when `ids` is empty.
fn resolve(manifest: &Manifest, ids: &[String]) -> Result<Vec<BenchmarkEntry>> {
    if ids.is_empty() {
        return Ok(registry()
            .iter()
            .filter(|e| e.id().starts_with("TP"))
            .map(|e| manifest.resolve(e.id()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|e| e.verify().is_verified())
            .collect());
    }
    ids.iter().map(|id| manifest.resolve(id)).collect()
}

fn experiment_config(flags: &RunFlags, batch: &BatchFlags, profile: Profile) -> ExperimentConfig {
    ExperimentConfig {
        run: flags.config(profile),
        runs: batch.runs,
        jobs: batch.jobs,
        delta_override: flags.delta_eq,
    }
}

fn solve(entry: &BenchmarkEntry, flags: &RunFlags, out: &Path) -> Result<()> {
    let mut config = flags.config(Profile::Optimistic);
    if flags.delta_eq.is_none() {
        config.delta_eq = entry.delta_eq.unwrap_or(config.delta_eq);
    }
    let result = run(&entry.problem, &config)?;
    let paths = write_run(&result, entry.id(), out)?;
    write_json(&out.join(format!("{}_config.json", entry.id())), &config)?;
    let b = &result.best;
    println!("{}\tF={:.6}\tf={:.6}\tfeasible={}", entry.id(), b.upper_fitness, b.lower_fitness, b.is_feasible());
    println!("x_u={:?}\nx_l={:?}", b.x_u, b.x_l);
    println!("evaluations={}\twall_time={:.3}s", result.evaluation_count, result.wall_time.as_secs_f64());
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn experiment(entries: &[BenchmarkEntry], flags: &RunFlags, batch: &BatchFlags, profile: ProfileArg, out: &Path) -> Result<()> {
    let profiles = profile.profiles();
    let mut reports = Vec::new();
    for p in &profiles {
        let cfg = experiment_config(flags, batch, *p);
        let report = run_experiment_on(entries, &cfg)?;
        let dir = if profiles.len() > 1 { out.join(p.label()) } else { out.to_path_buf() };
        println!("[{}]", p.label());
        println!("Prob\tbest F\tbest f\tmean F\tmean f\tvar F\tvar f");
        for (id, s) in &report.per_problem {
            println!(
                "{id}\t{:.5}\t{:.5}\t{:.5}\t{:.5}\t{:.3}\t{:.3}",
                s.best_upper, s.best_lower, s.mean_upper, s.mean_lower, s.var_upper, s.var_lower
            );
        }
        for path in write_experiment(&report, entries, &dir)? {
            println!("wrote {}", path.display());
        }
        reports.push(report);
    }
    if let [o, p] = reports.as_slice() {
        for path in write_profile_comparison(o, p, out)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
