//! Max-functions, optimal values, criterion surfaces, and approximate
//! solution sets.
//!
//! For a surface `f` over the product grid, the max-function is
//! `phi(gamma) = max_delta f(gamma, delta)`, the optimal value is
//! `V = min_gamma phi(gamma)`, and the criterion is
//! `Q(gamma, delta) = max{phi(gamma) - f(gamma, delta), phi(gamma) - V}`.
//! `Q` is nonnegative, vanishes exactly on the solution set, and its lower
//! contour set at slack `tau` is the set of `tau`-approximate solutions.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, ParamGrid, ParamSet};
use crate::objective::{sample_surface, Dataset, MinimaxProblem};

/// Absolute tolerance used to read the population solution set off a grid;
/// absorbs floating-point noise in analytic oracles, for which the criterion
/// vanishes exactly in real arithmetic.
pub const TOL_POP: f64 = 1e-12;

/// Slackness sequence `tau_n = scale * n^(-exponent)` with exponent in
/// (0, 1/2), so that `tau_n -> 0` while `n^(-1/2) / tau_n -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlacknessRule {
    scale: f64,
    exponent: f64,
}

impl SlacknessRule {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidSlacknessScale { scale });
        }
        if !(exponent > 0.0 && exponent < 0.5) {
            return Err(Error::InvalidSlacknessExponent { exponent });
        }
        Ok(Self { scale, exponent })
    }

    /// The sole concrete rate used by default: `tau_n = n^(-0.49)`.
    pub fn default_rate() -> Self {
        Self { scale: 1.0, exponent: 0.49 }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Slack level at sample size `n`.
    pub fn tau(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(-self.exponent)
    }
}

/// A surface together with its max-function, optimal value, and criterion.
#[derive(Debug, Clone)]
pub struct CriterionBundle {
    pub surface: GridFunction,
    /// Max-function over the gamma-marginal grid.
    pub max_fn: GridFunction,
    pub optimal_value: f64,
    pub criterion: GridFunction,
}

/// Max over each delta-slice: `phi(gamma) = max_delta f(gamma, delta)`.
pub fn max_function(surface: &GridFunction) -> Result<GridFunction> {
    if surface.domain() != Domain::Full {
        return Err(Error::DomainMismatch { context: "max_function" });
    }
    let grid = surface.grid();
    let dt = grid.delta_points();
    let values = surface.values();
    let phi: Vec<f64> = (0..grid.gamma_points())
        .map(|g| values[g * dt..(g + 1) * dt].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    GridFunction::new_gamma(Arc::clone(grid), phi)
}

/// Min of the max-function over the gamma grid.
pub fn optimal_value(max_fn: &GridFunction) -> Result<f64> {
    if max_fn.domain() != Domain::GammaMarginal {
        return Err(Error::DomainMismatch { context: "optimal_value" });
    }
    Ok(max_fn.min_value())
}

/// Assemble the criterion bundle for a surface.
///
/// The minimum of the criterion over the grid is exactly zero: at the
/// arg-min gamma of the max-function paired with the arg-max delta of its
/// slice, both branches of the max subtract a value from itself.
pub fn criterion_surface(surface: GridFunction) -> Result<CriterionBundle> {
    let max_fn = max_function(&surface)?;
    let v = optimal_value(&max_fn)?;
    let grid = surface.grid();
    let dt = grid.delta_points();
    let values = surface.values();
    let phi = max_fn.values();
    let q: Vec<f64> = (0..grid.total_points())
        .map(|flat| {
            let p = phi[flat / dt];
            (p - values[flat]).max(p - v)
        })
        .collect();
    let criterion = GridFunction::new_full(Arc::clone(grid), q)?;
    Ok(CriterionBundle { max_fn, optimal_value: v, criterion, surface })
}

/// Sample criterion bundle straight from data.
pub fn criterion_for_data(
    problem: &MinimaxProblem,
    data: &Dataset,
    grid: &Arc<ParamGrid>,
) -> Result<CriterionBundle> {
    criterion_surface(sample_surface(problem, data, grid)?)
}

/// Lower contour set of the criterion at level `tau` (inclusive).
/// Non-empty for every `tau >= 0`; `tau = 0` gives the exact solution set.
pub fn solution_set(bundle: &CriterionBundle, tau: f64) -> Result<ParamSet> {
    if tau < 0.0 {
        return Err(Error::NegativeLevel { context: "solution_set", value: tau });
    }
    let mask = bundle.criterion.values().iter().map(|q| *q <= tau).collect();
    ParamSet::from_mask(Arc::clone(bundle.criterion.grid()), mask)
}

/// Slack level of a rule at sample size `n`.
pub fn slackness(rule: &SlacknessRule, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::SampleTooSmall { context: "slackness", n, minimum: 1 });
    }
    Ok(rule.tau(n))
}

/// Export a bundle as CSV: `flat_index,gamma_*,delta_*,f,phi,q`.
pub fn write_criterion_csv<W: Write>(bundle: &CriterionBundle, mut w: W) -> Result<()> {
    let grid = bundle.surface.grid();
    let (dg, dd) = (grid.gamma_dim(), grid.delta_dim());
    let mut header = String::from("flat_index");
    for k in 0..dg {
        header.push_str(&format!(",gamma_{k}"));
    }
    for k in 0..dd {
        header.push_str(&format!(",delta_{k}"));
    }
    header.push_str(",f,phi,q");
    writeln!(w, "{header}")?;
    let dt = grid.delta_points();
    for flat in 0..grid.total_points() {
        let p = grid.point(flat);
        let coords: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        writeln!(
            w,
            "{flat},{},{},{},{}",
            coords.join(","),
            bundle.surface.value(flat),
            bundle.max_fn.value(flat / dt),
            bundle.criterion.value(flat)
        )?;
    }
    Ok(())
}
