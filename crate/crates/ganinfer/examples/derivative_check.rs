//! Directional derivatives of the sup, inf-sup, and criterion maps, checked
//! against finite-difference quotients on the two-point population surface.
//!
//! Run with: cargo run --release --example derivative_check

use ganinfer::asymptotics::{
    finite_difference_quotient, hadamard_derivative_criterion, hadamard_derivative_infsup,
    hadamard_derivative_sup, MapKind,
};
use ganinfer::grid::GridFunction;
use ganinfer::objective::population_surface;
use ganinfer::testbed::{two_point_grid, two_point_problem, TwoPointSpec};

fn main() -> ganinfer::Result<()> {
    let spec = TwoPointSpec::new(1.0, 0.2)?;
    let problem = two_point_problem(&spec);
    let grid = two_point_grid(&spec, 41)?;
    let surface = population_surface(&problem, &grid, None)?.surface;
    let tol = 1e-12;

    let direction = GridFunction::tabulate(&grid, |t| t[0] + 0.5 * t[1] * t[1])?;
    let analytic = [
        ("sup", MapKind::Sup, hadamard_derivative_sup(&surface, &direction, tol)?),
        ("infsup", MapKind::InfSup, hadamard_derivative_infsup(&surface, &direction, tol)?),
        ("criterion", MapKind::Criterion, hadamard_derivative_criterion(&surface, &direction, tol)?),
    ];
    println!("direction h(gamma, delta) = gamma + delta^2 / 2\n");
    for (name, map, value) in analytic {
        println!("{name:>9} map: analytic derivative = {value:+.6}");
        for t in [1e-1, 1e-2, 1e-3, 1e-4] {
            let quotient = finite_difference_quotient(map, &surface, &direction, t, tol)?;
            println!("           t = {t:<7.0e} quotient = {quotient:+.6}  |error| = {:.2e}", (quotient - value).abs());
        }
    }
    Ok(())
}
