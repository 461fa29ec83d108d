//! The step-down confidence set for the population solution set, with its
//! full iteration trace and JSON export.
//!
//! Run with: cargo run --release --example confidence_set

use ganinfer::subsampling::{step_down_confidence_set, total_subsample_count, SubsampleConfig};
use ganinfer::testbed::{generate_dataset, two_point_grid, two_point_problem, TwoPointSpec};

fn main() -> ganinfer::Result<()> {
    let spec = TwoPointSpec::new(1.0, 0.2)?;
    let problem = two_point_problem(&spec);
    let grid = two_point_grid(&spec, 41)?;
    let n = 2000;
    let data = generate_dataset(&problem, n, 3)?;

    let cfg = SubsampleConfig::default_rule(17);
    let (b, _) = cfg.subsample_size(n)?;
    println!(
        "n = {n}, subsample size b = {b}, using {} of the ~{:e} possible subsamples",
        cfg.num_subsamples,
        total_subsample_count(n, b) as f64
    );

    let result = step_down_confidence_set(&problem, &data, &grid, 0.10, &cfg)?;
    for (j, it) in result.iterations.iter().enumerate() {
        println!(
            "  step {}: |S| = {:>5}, sqrt(n) sup Q = {:>10.4}, quantile = {:>9.4}",
            j + 1,
            it.set.cardinality(),
            it.sup_statistic,
            it.quantile
        );
    }
    println!("stopped: {:?}", result.stop_reason);
    println!("confidence set members: {:?}", result.final_set.points());
    println!("\nJSON trace:\n{}", result.to_json()?);
    Ok(())
}
