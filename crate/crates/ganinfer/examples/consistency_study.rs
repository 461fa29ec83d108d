//! Monte Carlo study of Hausdorff consistency: the estimated solution set
//! approaches the population one as the sample grows.
//!
//! Run with: cargo run --release --example consistency_study

use ganinfer::experiment::{
    run_consistency_experiment, ExperimentConfig, ProblemSpec, SlacknessSpec, SubsamplingSpec,
};

fn main() -> ganinfer::Result<()> {
    let cfg = ExperimentConfig {
        problem: ProblemSpec::TwoPoint { mu: 1.0, sigma: 0.2 },
        grid_counts: vec![41, 41],
        sample_sizes: vec![250, 1000, 4000],
        replications: 50,
        alpha: 0.1,
        slackness: SlacknessSpec { scale: 1.0, exponent: 0.49 },
        subsampling: SubsamplingSpec::default(),
        master_seed: 20260810,
        limit_draws: 1000,
        covariance_sample_size: 1000,
        population_draws: None,
        out_dir: None,
    };
    let report = run_consistency_experiment(&cfg)?;
    println!("{:>6} {:>9} {:>12} {:>12} {:>14}", "n", "tau", "median d_H", "q3 d_H", "median tau0");
    for s in &report.summaries {
        println!(
            "{:>6} {:>9.4} {:>12.4} {:>12.4} {:>14.4}",
            s.n, s.tau, s.median_d_hausdorff, s.q3_d_hausdorff, s.median_sup_est_to_pop_tau0
        );
    }
    println!("(grid spacing: {:.4})", report.summaries[0].max_grid_spacing);
    Ok(())
}
