//! Experiment CLI: thin wrapper over the `ganinfer` library.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use ganinfer::error::{Error, Result};
use ganinfer::estimation::{criterion_for_data, solution_set, write_criterion_csv};
use ganinfer::experiment::{
    run_consistency_experiment, run_coverage_experiment, run_limit_check, ExperimentConfig,
};
use ganinfer::rng::derive_seed;
use ganinfer::subsampling::step_down_confidence_set;

const SOLVE_TAG: u64 = 0x501E;
const CONFSET_TAG: u64 = 0xCF5E;

const SCHEMAS: &str = "\
Output file schemas (columns are stable across versions):
  consistency_rows.csv   n,replication,seed,tau,d_hausdorff,sup_est_to_pop,
                         sup_pop_to_est,sup_est_to_pop_tau0,cardinality_tau,
                         cardinality_tau0
  consistency_report.json  config echo + per-n median/quartile summaries
  coverage_rows.csv      n,replication,seed,b,num_subsamples,covered,
                         iterations,final_cardinality,initial_sup_statistic,
                         initial_quantile,strictly_nested,stop_reason
  coverage_report.json   config echo + per-n coverage and binomial SE
  limit_rows.csv         n,replication,seed,statistic
  limit_draws_n<N>.csv   single column `value` (simulated limit draws)
  limit_empirical_n<N>.csv single column `value` (empirical statistics)
  limit_report.json      config echo + covariance + KS distance per n
  confset.json           alpha,n,b,num_subsamples,seed,stopped_reason,
                         iterations[{cardinality,sup_statistic,quantile}],
                         final_set_indices
  criterion.csv          flat_index,gamma_*,delta_*,f,phi,q
  solution_set.csv       flat_index,gamma_*,delta_*
Floats use shortest round-trip decimal formatting.

Exit codes: 0 success, 2 configuration error, 3 numerical error.";

/// Set-valued estimation and subsampling confidence sets for sample minimax
/// (GAN-type) problems.
#[derive(Parser)]
#[command(name = "ganinfer", version, after_long_help = SCHEMAS)]
struct Cli {
    /// JSON experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the master seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config's `out_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Worker threads (default: all cores). Outputs are identical for any
    /// thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one sample problem: print the optimal value and the
    /// tau-approximate solution set for a single dataset.
    Solve,
    /// Run the step-down procedure on one dataset and emit the JSON trace.
    Confset,
    /// Monte Carlo coverage study of the step-down confidence sets.
    Coverage,
    /// Monte Carlo Hausdorff-consistency study of the solution-set estimate.
    Consistency,
    /// Compare empirical scaled criterion sups against simulated limit draws.
    LimitCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()
        {
            eprintln!("error: failed to configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--config <PATH> is required".into()))?;
    let mut cfg = ExperimentConfig::from_json_file(path)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = Some(dir.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Solve => solve(&cfg),
        Command::Confset => confset(&cfg),
        Command::Consistency => {
            let report = run_consistency_experiment(&cfg)?;
            for s in &report.summaries {
                println!(
                    "n={} tau={:.6} median d_H={:.6} (2x spacing = {:.6})",
                    s.n,
                    s.tau,
                    s.median_d_hausdorff,
                    2.0 * s.max_grid_spacing
                );
            }
            if let Some(dir) = &cfg.out_dir {
                report.write_files(dir)?;
                println!("wrote {}", dir.join("consistency_rows.csv").display());
            }
            Ok(())
        }
        Command::Coverage => {
            let report = run_coverage_experiment(&cfg)?;
            for s in &report.summaries {
                println!(
                    "n={} b={} coverage={:.4} (se {:.4}) over {} replications",
                    s.n, s.b, s.coverage, s.coverage_standard_error, s.replications
                );
            }
            if let Some(dir) = &cfg.out_dir {
                report.write_files(dir)?;
                println!("wrote {}", dir.join("coverage_rows.csv").display());
            }
            Ok(())
        }
        Command::LimitCheck => {
            let report = run_limit_check(&cfg)?;
            for s in &report.summaries {
                println!(
                    "n={} K={} KS distance={:.4} ({} empirical vs {} simulated)",
                    s.n, s.solution_count, s.ks_distance, s.replications, s.limit_draws
                );
            }
            if let Some(dir) = &cfg.out_dir {
                report.write_files(dir)?;
                println!("wrote {}", dir.join("limit_rows.csv").display());
            }
            Ok(())
        }
    }
}

fn solve(cfg: &ExperimentConfig) -> Result<()> {
    let problem = cfg.build_problem()?;
    let grid = cfg.build_grid(&problem)?;
    let n = cfg.sample_sizes[0];
    let rule = cfg.slackness.rule()?;
    let tau = rule.tau(n);
    let seed = derive_seed(cfg.master_seed, &[SOLVE_TAG, n as u64]);
    let data = problem.sample(n, seed)?;
    let bundle = criterion_for_data(&problem, &data, &grid)?;
    let estimate = solution_set(&bundle, tau)?;
    println!("n = {n}, dataset seed = {seed}");
    println!("optimal value = {}", bundle.optimal_value);
    println!("tau = {tau}");
    println!("solution set ({} points):", estimate.cardinality());
    for i in estimate.indices() {
        let p = grid.point(i);
        let coords: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        println!("  [{i}] ({})", coords.join(", "));
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        let mut csv = Vec::new();
        write_criterion_csv(&bundle, &mut csv)?;
        std::fs::write(dir.join("criterion.csv"), csv)?;
        let mut set_csv = Vec::new();
        estimate.write_member_csv(&mut set_csv)?;
        std::fs::write(dir.join("solution_set.csv"), set_csv)?;
        let mut data_csv = Vec::new();
        data.write_csv(&mut data_csv)?;
        std::fs::write(dir.join("dataset.csv"), data_csv)?;
        println!("wrote {}", dir.join("criterion.csv").display());
    }
    Ok(())
}

fn confset(cfg: &ExperimentConfig) -> Result<()> {
    let problem = cfg.build_problem()?;
    let grid = cfg.build_grid(&problem)?;
    let n = cfg.sample_sizes[0];
    let seed = derive_seed(cfg.master_seed, &[CONFSET_TAG, n as u64]);
    let data = problem.sample(n, derive_seed(seed, &[0]))?;
    let sub = ganinfer::subsampling::SubsampleConfig::new(
        cfg.subsampling.beta,
        cfg.subsampling.kappa,
        cfg.subsampling.num_subsamples,
        derive_seed(seed, &[1]),
    )?;
    let result = step_down_confidence_set(&problem, &data, &Arc::clone(&grid), cfg.alpha, &sub)?;
    println!(
        "n = {n}, b = {}, M = {}, alpha = {}",
        result.subsample_size, result.num_subsamples, result.alpha
    );
    for (j, it) in result.iterations.iter().enumerate() {
        println!(
            "  step {}: |S| = {}, T = {:.6}, c = {:.6}",
            j + 1,
            it.set.cardinality(),
            it.sup_statistic,
            it.quantile
        );
    }
    println!(
        "confidence set: {} of {} grid points",
        result.final_set.cardinality(),
        grid.total_points()
    );
    let json = result.to_json()?;
    match &cfg.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("confset.json"), format!("{json}\n"))?;
            println!("wrote {}", dir.join("confset.json").display());
        }
        None => println!("{json}"),
    }
    Ok(())
}
