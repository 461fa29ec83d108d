//! Criterion surfaces and approximate solution sets: the sample estimate of
//! the population solution set and its Hausdorff distance to the truth.
//!
//! Run with: cargo run --release --example solution_sets

use ganinfer::estimation::{criterion_for_data, criterion_surface, solution_set, SlacknessRule, TOL_POP};
use ganinfer::grid::hausdorff_distance;
use ganinfer::objective::population_surface;
use ganinfer::testbed::{generate_dataset, two_point_grid, two_point_problem, TwoPointSpec};

fn main() -> ganinfer::Result<()> {
    let spec = TwoPointSpec::new(1.0, 0.2)?;
    let problem = two_point_problem(&spec);
    let grid = two_point_grid(&spec, 41)?;

    // Ground truth from the analytic population surface.
    let pop = population_surface(&problem, &grid, None)?;
    let pop_bundle = criterion_surface(pop.surface)?;
    let truth = solution_set(&pop_bundle, TOL_POP)?;
    println!("population optimal value = {:.6} (closed form {:.6})", pop_bundle.optimal_value, spec.optimal_value());
    println!("population solution set: {:?}", truth.points());

    let rule = SlacknessRule::default_rate();
    for n in [250usize, 1000, 4000] {
        let data = generate_dataset(&problem, n, 42)?;
        let bundle = criterion_for_data(&problem, &data, &grid)?;
        let tau = rule.tau(n);
        let exact = solution_set(&bundle, 0.0)?;
        let relaxed = solution_set(&bundle, tau)?;
        println!(
            "n = {n:>5}: V_n = {:+.5}, tau = {:.4}, |exact| = {}, |relaxed| = {}, d_H(relaxed, truth) = {:.4}",
            bundle.optimal_value,
            tau,
            exact.cardinality(),
            relaxed.cardinality(),
            hausdorff_distance(&relaxed, &truth)?
        );
    }
    Ok(())
}
