//! Parameter grids, grid-point sets, and the set metrics:
//! point-to-set distance, Hausdorff distance, and epsilon-expansion.
//!
//! Run with: cargo run --release --example grid_metrics

use std::sync::Arc;

use ganinfer::grid::{
    epsilon_expansion, hausdorff_distance, point_to_set_distance, ParamBox, ParamGrid, ParamSet,
};

fn main() -> ganinfer::Result<()> {
    // A 2-D box: one gamma axis on [-1, 1], one delta axis on [0, 2].
    let bounds = ParamBox::rect2((-1.0, 1.0), (0.0, 2.0))?;
    let grid = ParamGrid::new(bounds, vec![5, 5])?;
    println!("grid: {} points, spacings ({}, {})", grid.total_points(), grid.spacing(0), grid.spacing(1));
    println!("first point {:?}, last point {:?}", grid.point(0), grid.point(grid.total_points() - 1));

    // Two small sets of grid points.
    let a = ParamSet::from_indices(Arc::clone(&grid), &[0, 6, 12])?;
    let b = ParamSet::from_indices(Arc::clone(&grid), &[12, 18, 24])?;
    println!("\nA = {:?}", a.points());
    println!("B = {:?}", b.points());
    println!("d((0,0), B)    = {:.4}", point_to_set_distance(&[0.0, 0.0], &b)?);
    println!("d_H(A, B)      = {:.4}", hausdorff_distance(&a, &b)?);
    println!("d_H(A, A)      = {:.4}", hausdorff_distance(&a, &a)?);

    // Epsilon-expansion grows monotonically with the radius.
    for eps in [0.0, 0.5, 1.0, grid.diameter()] {
        let grown = epsilon_expansion(&a, eps)?;
        println!("|A^eps| at eps = {eps:.3}: {}", grown.cardinality());
    }
    Ok(())
}
