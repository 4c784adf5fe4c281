//! CLI front end: generate instances, solve a single instance, run the
//! benchmark matrix, or run the self-check property suites.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bsp::baselines::{brute_force, greedy, local_search, DEFAULT_BRUTE_FORCE_CAP};
use bsp::distributions::{generate_lognormal_instance, AuctionInstance};
use bsp::harness::{report_to_csv, report_to_json, run_experiment, ExperimentConfig};
use bsp::objectives::{
    h_ber, h_cher, h_pois, total_variation_pb_vs_poisson, BernoulliVector,
};
use bsp::rounding::round_best_of;
use bsp::solver::{
    solve_alg1, solve_chernoff_large_l, solve_poisson_small_tail, solve_practical,
    solve_single_item, SolverConfig,
};
use bsp::welfare::WelfareEvaluator;
use bsp::BspError;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "BSP_OUT_DIR";

#[derive(Parser)]
#[command(name = "bsp", about = "Bidder selection solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Alg1,
    Practical,
    SingleItem,
    ChernoffLargeL,
    PoissonSmallTail,
    Greedy,
    LocalSearch,
    BruteForce,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic lognormal instance and write it as JSON.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        grid_size: usize,
        /// Output file (defaults to instance_n{n}_k{k}_s{seed}.json in the
        /// output directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one algorithm on one instance file and print the result.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        algorithm: AlgArg,
        /// Unit cap for the l-unit variants (defaults to k).
        #[arg(long)]
        ell: Option<usize>,
        /// Tail cap for the small-tail variant.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        rounding_trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the benchmark matrix from a config file (or the built-in default).
    Bench {
        /// JSON config; omitted = desk-scale default matrix.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Add the large (n=1000) cells; baselines stay off for them.
        #[arg(long, default_value_t = false)]
        include_large: bool,
        #[arg(long, value_enum, default_value_t = FormatArg::Both)]
        format: FormatArg,
        /// Output directory (falls back to $BSP_OUT_DIR, then ".").
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the built-in property suites and exit nonzero on any failure.
    Verify,
}

fn out_dir(cli_dir: Option<PathBuf>) -> PathBuf {
    cli_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(path: &Path, contents: &str) -> Result<(), BspError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| BspError::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|e| BspError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn read_file(path: &Path) -> Result<String, BspError> {
    std::fs::read_to_string(path).map_err(|e| BspError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn run() -> Result<(), BspError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            n,
            k,
            seed,
            grid_size,
            out,
        } => {
            let instance = generate_lognormal_instance(n, k, seed, grid_size)?;
            let path = out.unwrap_or_else(|| {
                out_dir(None).join(format!("instance_n{n}_k{k}_s{seed}.json"))
            });
            write_file(&path, &instance.to_json())?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Solve {
            instance,
            algorithm,
            ell,
            delta,
            rounding_trials,
            seed,
        } => {
            let inst = AuctionInstance::from_json(&read_file(&instance)?)?;
            let ev = WelfareEvaluator::new(&inst);
            let cfg = SolverConfig::default();
            let ell = ell.unwrap_or(inst.k());
            let (name, welfare, extra) = match algorithm {
                AlgArg::Greedy => {
                    let r = greedy(&ev);
                    ("greedy", r.welfare, format!("evaluations={}", r.evaluations))
                }
                AlgArg::LocalSearch => {
                    let g = greedy(&ev);
                    let r = local_search(&ev, &g.selected, 10_000);
                    (
                        "local_search",
                        r.welfare,
                        format!("swaps={}", r.iterations),
                    )
                }
                AlgArg::BruteForce => {
                    let r = brute_force(&ev, DEFAULT_BRUTE_FORCE_CAP)?;
                    (
                        "brute_force",
                        r.welfare,
                        format!("evaluations={}", r.evaluations),
                    )
                }
                AlgArg::Alg1
                | AlgArg::Practical
                | AlgArg::SingleItem
                | AlgArg::ChernoffLargeL
                | AlgArg::PoissonSmallTail => {
                    let report = match algorithm {
                        AlgArg::Alg1 => solve_alg1(&inst, &cfg)?,
                        AlgArg::Practical => solve_practical(&inst, &cfg)?,
                        AlgArg::SingleItem => solve_single_item(&inst, &cfg)?,
                        AlgArg::ChernoffLargeL => solve_chernoff_large_l(&inst, ell, &cfg)?,
                        AlgArg::PoissonSmallTail => {
                            solve_poisson_small_tail(&inst, ell, delta, &cfg)?
                        }
                        _ => unreachable!(),
                    };
                    let rounded = round_best_of(&ev, &report.solution, rounding_trials, seed);
                    (
                        report.variant,
                        rounded.welfare,
                        format!(
                            "relaxed_objective={:.10} iterations={} converged={} selected={:?}",
                            report.objective_value,
                            report.iterations,
                            report.converged,
                            rounded.selected.members()
                        ),
                    )
                }
            };
            println!("algorithm={name} welfare={welfare:.10} {extra}");
            Ok(())
        }
        Command::Bench {
            config,
            include_large,
            format,
            out_dir: dir,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    serde_json::from_str::<ExperimentConfig>(&read_file(&path)?).map_err(|e| {
                        BspError::Json {
                            path: path.display().to_string(),
                            source: e,
                        }
                    })?
                }
                None => ExperimentConfig::desk_default(),
            };
            if include_large {
                cfg.cells
                    .extend_from_slice(&ExperimentConfig::large_cells().cells);
            }
            let report = run_experiment(&cfg)?;
            let dir = out_dir(dir);
            if matches!(format, FormatArg::Csv | FormatArg::Both) {
                let path = dir.join("report.csv");
                write_file(&path, &report_to_csv(&report))?;
                println!("wrote {}", path.display());
            }
            if matches!(format, FormatArg::Json | FormatArg::Both) {
                let path = dir.join("report.json");
                write_file(&path, &report_to_json(&report))?;
                println!("wrote {}", path.display());
            }
            for a in &report.aggregates {
                println!(
                    "n={} k={} {}: relative {:.2}% +/- {:.2}%, mean time {:.3}s",
                    a.n, a.k, a.algorithm, a.mean_relative_pct, a.std_relative_pct,
                    a.mean_wall_time_s
                );
            }
            Ok(())
        }
        Command::Verify => verify(),
    }
}

/// Condensed self-checks over the main numeric invariants; the full suites
/// live in the test tree.
fn verify() -> Result<(), BspError> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut failures = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{} {}", if ok { "PASS" } else { "FAIL" }, name);
        if !ok {
            failures += 1;
        }
    };

    // Surrogate-objective inequalities on random Bernoulli vectors.
    let mut sandwich_ok = true;
    for _ in 0..500 {
        let n = rng.gen_range(1..20);
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let q = BernoulliVector::new(q).unwrap();
        let l = rng.gen_range(1..=n);
        let ber = h_ber(&q, l);
        let cher = h_cher(&q, l);
        if !(ber <= cher + 1e-10 && cher <= 7.0 * ber + 1e-10) {
            sandwich_ok = false;
        }
    }
    check("chernoff sandwich h_ber <= h_cher <= 7 h_ber", sandwich_ok);

    // Poisson approximation quality in the small-probability regime the
    // bound is stated for.
    let mut tv_ok = true;
    for _ in 0..500 {
        let n = rng.gen_range(1..30);
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.2)).collect();
        let q = BernoulliVector::new(q).unwrap();
        if total_variation_pb_vs_poisson(&q) > q.max_entry() + 1e-9 {
            tv_ok = false;
        }
    }
    check("total variation vs poisson <= max q (small q)", tv_ok);

    // Midpoint concavity of the Poisson term.
    let mut concave_ok = true;
    for _ in 0..2000 {
        let l = rng.gen_range(1..10);
        let a = rng.gen_range(0.0..20.0);
        let b = rng.gen_range(0.0..20.0);
        let mid = h_pois(0.5 * (a + b), l);
        if mid < 0.5 * (h_pois(a, l) + h_pois(b, l)) - 1e-12 {
            concave_ok = false;
        }
    }
    check("poisson term midpoint concavity", concave_ok);

    // End-to-end sanity on a small instance.
    let inst = generate_lognormal_instance(12, 4, 7, 20)?;
    let ev = WelfareEvaluator::new(&inst);
    let g = greedy(&ev);
    let ls = local_search(&ev, &g.selected, 1000);
    let bf = brute_force(&ev, DEFAULT_BRUTE_FORCE_CAP)?;
    check(
        "greedy <= local search <= brute force",
        g.welfare <= ls.welfare + 1e-12 && ls.welfare <= bf.welfare + 1e-12,
    );
    let pr = solve_practical(&inst, &SolverConfig::default())?;
    let rounded = round_best_of(&ev, &pr.solution, 10, 0);
    check(
        "practical + rounding within 90% of brute force",
        rounded.welfare >= 0.9 * bf.welfare,
    );

    if failures == 0 {
        Ok(())
    } else {
        Err(BspError::Internal(format!("{failures} checks failed")))
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
