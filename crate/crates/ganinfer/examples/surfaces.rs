//! Sample and population objective surfaces on a grid, and how fast the
//! sample surface converges to the population one.
//!
//! Run with: cargo run --release --example surfaces

use ganinfer::objective::{population_surface, sample_surface, PopulationSource};
use ganinfer::testbed::{generate_dataset, two_point_grid, two_point_problem, TwoPointSpec};

fn main() -> ganinfer::Result<()> {
    let spec = TwoPointSpec::new(1.0, 0.2)?;
    let problem = two_point_problem(&spec);
    let grid = two_point_grid(&spec, 41)?;
    println!("two-point problem: solutions {:?}", spec.solutions());

    let pop = population_surface(&problem, &grid, None)?;
    assert!(matches!(pop.source, PopulationSource::Analytic));
    println!("population surface tabulated on {} points (analytic oracle)", grid.total_points());

    for n in [250usize, 1000, 4000] {
        let data = generate_dataset(&problem, n, 7)?;
        let sample = sample_surface(&problem, &data, &grid)?;
        let sup = sample.sup_abs_diff(&pop.surface)?;
        println!(
            "n = {n:>5}: sup |f_n - f| = {sup:.5}, sqrt(n) * sup = {:.3}",
            (n as f64).sqrt() * sup
        );
    }

    // CSV round trip of a dataset.
    let data = generate_dataset(&problem, 3, 1)?;
    let mut csv = Vec::new();
    data.write_csv(&mut csv)?;
    println!("\ndataset CSV:\n{}", String::from_utf8_lossy(&csv));
    Ok(())
}
