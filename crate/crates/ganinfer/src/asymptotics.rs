//! Active-set extraction, directional derivatives of the sup / inf-sup /
//! criterion maps with finite-difference verification, and simulation of the
//! limiting distribution of the scaled criterion sup over the solution set.
//!
//! For a finite solution set with pairwise-distinct gamma and delta blocks,
//! the limiting statistic is `max_k G_k - min_k G_k` for a mean-zero
//! Gaussian vector `G` whose covariance is the covariance of the kernel
//! values at the solution points, estimated here from a sample.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{max_function, optimal_value};
use crate::grid::{Domain, GridFunction, ParamSet};
use crate::objective::{eval_kernel, Dataset, MinimaxProblem};
use crate::rng::{rng_from, standard_normal};

/// Sample variances below this are treated as degenerate (the kernel is
/// constant at the point up to rounding).
const DEGENERATE_VARIANCE_TOL: f64 = 1e-20;

/// Relative slack for the numerical positive-semidefiniteness check.
const PSD_TOL: f64 = 1e-10;

/// Relative tolerance at which two covariance components are treated as the
/// same random variable (perfect correlation with equal variance). Collapsing
/// them keeps draws of duplicated components bitwise identical, so degenerate
/// limits stay exactly degenerate.
const DUPLICATE_TOL: f64 = 1e-12;

/// Argmax / argmin structure of a surface within a tolerance.
///
/// `gamma0` holds the gamma-marginal indices whose max-function value is
/// within `tol` of its minimum; `delta0(g)` holds, for each such gamma, the
/// delta-block indices attaining the slice maximum within `tol`; `theta0` is
/// the set of full grid indices combining the two.
#[derive(Debug, Clone)]
pub struct ActiveSets {
    gamma0: Vec<usize>,
    delta0_by_gamma: BTreeMap<usize, Vec<usize>>,
    theta0: ParamSet,
    tol: f64,
}

impl ActiveSets {
    pub fn gamma0(&self) -> &[usize] {
        &self.gamma0
    }

    pub fn delta0(&self, gamma_flat: usize) -> Option<&[usize]> {
        self.delta0_by_gamma.get(&gamma_flat).map(|v| v.as_slice())
    }

    pub fn theta0(&self) -> &ParamSet {
        &self.theta0
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// True when every gamma grid point is active; in that case the
    /// criterion-map derivative rests on an argmin set that is not a small
    /// finite set, which callers may want to reject.
    pub fn gamma0_is_full(&self) -> bool {
        self.gamma0.len() == self.theta0.grid().gamma_points()
    }
}

/// Extract the active sets of a surface, with attainment read as "within
/// `tol` of the extremum".
pub fn active_sets(surface: &GridFunction, tol: f64) -> Result<ActiveSets> {
    if tol < 0.0 {
        return Err(Error::NegativeLevel { context: "active_sets", value: tol });
    }
    if surface.domain() != Domain::Full {
        return Err(Error::DomainMismatch { context: "active_sets" });
    }
    let grid = surface.grid();
    let phi = max_function(surface)?;
    let v = optimal_value(&phi)?;
    let dt = grid.delta_points();
    let values = surface.values();
    let mut gamma0 = Vec::new();
    let mut delta0_by_gamma = BTreeMap::new();
    let mut theta0_indices = Vec::new();
    for g in 0..grid.gamma_points() {
        if phi.value(g) <= v + tol {
            gamma0.push(g);
            let slice = &values[g * dt..(g + 1) * dt];
            let slice_max = phi.value(g);
            let deltas: Vec<usize> = (0..dt).filter(|d| slice[*d] >= slice_max - tol).collect();
            for &d in &deltas {
                theta0_indices.push(grid.compose_flat(g, d));
            }
            delta0_by_gamma.insert(g, deltas);
        }
    }
    let theta0 = ParamSet::from_indices(Arc::clone(grid), &theta0_indices)?;
    Ok(ActiveSets { gamma0, delta0_by_gamma, theta0, tol })
}

/// Directional derivative of the global-sup map at `x`: the max of `h` over
/// the points where `x` attains its maximum (within `tol`).
pub fn hadamard_derivative_sup(x: &GridFunction, h: &GridFunction, tol: f64) -> Result<f64> {
    if tol < 0.0 {
        return Err(Error::NegativeLevel { context: "hadamard_derivative_sup", value: tol });
    }
    check_pair(x, h)?;
    let max = x.max_value();
    let best = x
        .values()
        .iter()
        .zip(h.values())
        .filter(|(xv, _)| **xv >= max - tol)
        .map(|(_, hv)| *hv)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// Directional derivative of the inf-sup map at `x`: the min over active
/// gammas of the max of `h` over the active deltas of that gamma.
pub fn hadamard_derivative_infsup(x: &GridFunction, h: &GridFunction, tol: f64) -> Result<f64> {
    check_pair(x, h)?;
    let sets = active_sets(x, tol)?;
    Ok(infsup_direction(&sets, h))
}

/// Directional derivative of the criterion map at `x0` (active sets of `x0`
/// held fixed): the max over active `(gamma0, delta0)` pairs of
/// `max_{delta in Delta0(gamma0)} h(gamma0, delta)
///  - min{h(gamma0, delta0), infsup-derivative of h}`.
pub fn hadamard_derivative_criterion(
    x0: &GridFunction,
    h: &GridFunction,
    tol: f64,
) -> Result<f64> {
    check_pair(x0, h)?;
    let sets = active_sets(x0, tol)?;
    let infsup = infsup_direction(&sets, h);
    let grid = x0.grid();
    let hv = h.values();
    let mut best = f64::NEG_INFINITY;
    for (&g, deltas) in &sets.delta0_by_gamma {
        let slice_best = deltas
            .iter()
            .map(|&d| hv[grid.compose_flat(g, d)])
            .fold(f64::NEG_INFINITY, f64::max);
        for &d in deltas {
            let at_solution = hv[grid.compose_flat(g, d)];
            best = best.max(slice_best - at_solution.min(infsup));
        }
    }
    Ok(best)
}

fn infsup_direction(sets: &ActiveSets, h: &GridFunction) -> f64 {
    let grid = h.grid();
    let hv = h.values();
    sets.delta0_by_gamma
        .iter()
        .map(|(&g, deltas)| {
            deltas
                .iter()
                .map(|&d| hv[grid.compose_flat(g, d)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_pair(x: &GridFunction, h: &GridFunction) -> Result<()> {
    if x.domain() != Domain::Full || h.domain() != Domain::Full {
        return Err(Error::DomainMismatch { context: "directional derivative" });
    }
    if !(Arc::ptr_eq(x.grid(), h.grid()) || x.grid() == h.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Which map a finite-difference quotient probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Global sup over the grid.
    Sup,
    /// Inf over gamma of the sup over delta.
    InfSup,
    /// Criterion map with the active sets of the base surface held fixed.
    Criterion,
}

fn infsup_value(y: &GridFunction) -> Result<f64> {
    optimal_value(&max_function(y)?)
}

/// The criterion map evaluated at a surface `y`, with the active sets held
/// fixed: `max over active (gamma0, delta0) of { max_delta y(gamma0, .) -
/// min{ y(gamma0, delta0), infsup y } }`. Vanishes at the surface the active
/// sets were extracted from and is Lipschitz with constant 2 in the sup norm.
pub fn criterion_map(sets: &ActiveSets, y: &GridFunction) -> Result<f64> {
    criterion_map_value(sets, y)
}

fn criterion_map_value(sets: &ActiveSets, y: &GridFunction) -> Result<f64> {
    let grid = y.grid();
    let dt = grid.delta_points();
    let yv = y.values();
    let infsup = infsup_value(y)?;
    let mut best = f64::NEG_INFINITY;
    for (&g, deltas) in &sets.delta0_by_gamma {
        let slice = &yv[g * dt..(g + 1) * dt];
        let slice_max = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &d in deltas {
            let at_solution = yv[grid.compose_flat(g, d)];
            best = best.max(slice_max - at_solution.min(infsup));
        }
    }
    Ok(best)
}

/// Finite-difference quotient `(phi(x0 + t*h) - phi(x0)) / t` of the chosen
/// map, evaluated exactly on the grid. `tol` fixes the active sets of `x0`
/// for the criterion map and is ignored by the other two.
pub fn finite_difference_quotient(
    map: MapKind,
    x0: &GridFunction,
    h: &GridFunction,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::NonPositiveScale { value: t });
    }
    check_pair(x0, h)?;
    let shifted = x0.perturbed(h, t)?;
    let (base, moved) = match map {
        MapKind::Sup => (x0.max_value(), shifted.max_value()),
        MapKind::InfSup => (infsup_value(x0)?, infsup_value(&shifted)?),
        MapKind::Criterion => {
            let sets = active_sets(x0, tol)?;
            (criterion_map_value(&sets, x0)?, criterion_map_value(&sets, &shifted)?)
        }
    };
    Ok((moved - base) / t)
}

/// How the limiting statistic is assembled from the Gaussian vector.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitStructure {
    /// Solutions with pairwise-distinct gamma and delta blocks: the statistic
    /// is `max_k G_k - min_k G_k`.
    DistinctFinite,
    /// Finite solution set with shared gammas: `gamma_groups` partitions the
    /// point indices by common gamma block, and the statistic is
    /// `max_k { max_{j in group(k)} G_j - min(G_k, min_g max_{j in g} G_j) }`.
    GeneralFinite { gamma_groups: Vec<Vec<usize>> },
}

/// Mean-zero Gaussian vector model for the kernel values at the solution
/// points, with the structure flag steering the limit statistic.
#[derive(Debug, Clone)]
pub struct GaussianLimitModel {
    points: Vec<Vec<f64>>,
    covariance: DMatrix<f64>,
    structure: LimitStructure,
}

impl GaussianLimitModel {
    pub fn new(
        points: Vec<Vec<f64>>,
        covariance: Vec<Vec<f64>>,
        structure: LimitStructure,
    ) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::EmptySet { context: "limit model points" });
        }
        if covariance.len() != k || covariance.iter().any(|row| row.len() != k) {
            return Err(Error::DimensionMismatch {
                context: "covariance matrix",
                expected: k,
                actual: covariance.len(),
            });
        }
        let mat = DMatrix::from_fn(k, k, |i, j| covariance[i][j]);
        let scale = (0..k).map(|i| mat[(i, i)].abs()).fold(1.0, f64::max);
        for i in 0..k {
            if mat[(i, i)] <= DEGENERATE_VARIANCE_TOL {
                return Err(Error::DegenerateVariance { index: i, variance: mat[(i, i)] });
            }
            for j in 0..k {
                if (mat[(i, j)] - mat[(j, i)]).abs() > PSD_TOL * scale {
                    return Err(Error::InvalidConfig("covariance matrix not symmetric".into()));
                }
            }
        }
        let eigen = SymmetricEigen::new(mat.clone());
        let min_eig = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL * scale {
            return Err(Error::CovarianceNotPsd { min_eigenvalue: min_eig });
        }
        if let LimitStructure::GeneralFinite { gamma_groups } = &structure {
            let mut seen = vec![false; k];
            for group in gamma_groups {
                for &idx in group {
                    if idx >= k || seen[idx] {
                        return Err(Error::InvalidConfig(
                            "gamma groups must partition the point indices".into(),
                        ));
                    }
                    seen[idx] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidConfig(
                    "gamma groups must cover every point index".into(),
                ));
            }
        }
        Ok(Self { points, covariance: mat, structure })
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.covariance[(i, j)]
    }

    pub fn structure(&self) -> &LimitStructure {
        &self.structure
    }

    pub fn is_distinct_finite(&self) -> bool {
        matches!(self.structure, LimitStructure::DistinctFinite)
    }
}

/// Estimate the limit model at the given solution points: the sample
/// covariance (denominator `n - 1`) of the kernel values across rows, and
/// the `DistinctFinite` flag when both the gamma and the delta blocks are
/// pairwise distinct across points.
pub fn estimate_limit_covariance(
    problem: &MinimaxProblem,
    data: &Dataset,
    theta0_points: &[Vec<f64>],
) -> Result<GaussianLimitModel> {
    let k = theta0_points.len();
    if k == 0 {
        return Err(Error::EmptySet { context: "estimate_limit_covariance" });
    }
    let n = data.n();
    if n < 2 {
        return Err(Error::SampleTooSmall { context: "estimate_limit_covariance", n, minimum: 2 });
    }

    // n x k kernel values, row-major.
    let mut values = vec![0.0; n * k];
    for (j, theta) in theta0_points.iter().enumerate() {
        for i in 0..n {
            let v = eval_kernel(problem, data.x_row(i), data.z_row(i), theta).map_err(|e| {
                match e {
                    Error::NonFiniteKernel { theta, value, .. } => {
                        Error::NonFiniteKernel { row: Some(i), theta, value }
                    }
                    other => other,
                }
            })?;
            values[i * k + j] = v;
        }
    }
    let means: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| values[i * k + j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let s: f64 = (0..n)
                .map(|i| (values[i * k + a] - means[a]) * (values[i * k + b] - means[b]))
                .sum();
            let c = s / (n - 1) as f64;
            cov[a][b] = c;
            cov[b][a] = c;
        }
    }
    for (j, row) in cov.iter().enumerate() {
        if row[j] <= DEGENERATE_VARIANCE_TOL {
            return Err(Error::DegenerateVariance { index: j, variance: row[j] });
        }
    }

    let dg = problem.bounds().gamma_dim();
    let distinct = |block: fn(&[f64], usize) -> &[f64]| {
        (0..k).all(|a| (a + 1..k).all(|b| block(&theta0_points[a], dg) != block(&theta0_points[b], dg)))
    };
    fn gamma_block(t: &[f64], dg: usize) -> &[f64] {
        &t[..dg]
    }
    fn delta_block(t: &[f64], dg: usize) -> &[f64] {
        &t[dg..]
    }
    let structure = if distinct(gamma_block) && distinct(delta_block) {
        LimitStructure::DistinctFinite
    } else {
        // Group points by shared gamma block for the general statistic.
        let mut groups: Vec<Vec<usize>> = Vec::new();
        'outer: for idx in 0..k {
            for group in groups.iter_mut() {
                if gamma_block(&theta0_points[group[0]], dg) == gamma_block(&theta0_points[idx], dg)
                {
                    group.push(idx);
                    continue 'outer;
                }
            }
            groups.push(vec![idx]);
        }
        LimitStructure::GeneralFinite { gamma_groups: groups }
    };
    GaussianLimitModel::new(theta0_points.to_vec(), cov, structure)
}

/// Partition component indices into classes that are duplicates of each
/// other (equal variance, correlation one, within `DUPLICATE_TOL`).
fn duplicate_classes(cov: &DMatrix<f64>) -> Vec<usize> {
    let k = cov.nrows();
    let scale = (0..k).map(|i| cov[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut class = vec![usize::MAX; k];
    let mut next = 0;
    for i in 0..k {
        if class[i] != usize::MAX {
            continue;
        }
        class[i] = next;
        for j in i + 1..k {
            if class[j] == usize::MAX
                && (cov[(i, i)] - cov[(j, j)]).abs() <= DUPLICATE_TOL * scale
                && (cov[(i, j)] - cov[(i, i)]).abs() <= DUPLICATE_TOL * scale
            {
                class[j] = next;
            }
        }
        next += 1;
    }
    class
}

/// Draw the limiting statistic `reps` times.
///
/// Mean-zero Gaussian vectors with the model covariance are produced through
/// an eigenvalue factorization (eigenvalues clamped at zero within the PSD
/// tolerance). Components that are duplicates of each other receive the
/// identical draw, so a fully degenerate model yields exact zeros. Draw `r`
/// depends only on `(seed, r)`; partitioning across workers cannot change
/// the output.
pub fn simulate_limit_distribution(
    model: &GaussianLimitModel,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::EmptySample { context: "simulate_limit_distribution" });
    }
    let k = model.dim();
    let class = duplicate_classes(&model.covariance);
    let r = class.iter().copied().max().expect("non-empty") + 1;
    // Reduced covariance over class representatives.
    let mut reps_of_class = vec![0usize; r];
    for (i, &c) in class.iter().enumerate() {
        reps_of_class[c] = i;
    }
    let reduced = DMatrix::from_fn(r, r, |a, b| {
        model.covariance[(reps_of_class[a], reps_of_class[b])]
    });
    let eigen = SymmetricEigen::new(reduced);
    let scale = (0..r).map(|i| model.covariance[(i, i)].abs()).fold(1.0, f64::max);
    let min_eig = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL * scale {
        return Err(Error::CovarianceNotPsd { min_eigenvalue: min_eig });
    }
    let mut factor = eigen.eigenvectors;
    for c in 0..r {
        let s = eigen.eigenvalues[c].max(0.0).sqrt();
        for row in 0..r {
            factor[(row, c)] *= s;
        }
    }

    let draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng_from(seed, &[0x11D, rep as u64]);
            let z: Vec<f64> = (0..r).map(|_| standard_normal(&mut rng)).collect();
            let mut reduced_draw = vec![0.0; r];
            for row in 0..r {
                let mut acc = 0.0;
                for col in 0..r {
                    acc += factor[(row, col)] * z[col];
                }
                reduced_draw[row] = acc;
            }
            let g: Vec<f64> = (0..k).map(|i| reduced_draw[class[i]]).collect();
            match &model.structure {
                LimitStructure::DistinctFinite => {
                    let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
                    max - min
                }
                LimitStructure::GeneralFinite { gamma_groups } => {
                    let group_max: Vec<f64> = gamma_groups
                        .iter()
                        .map(|grp| grp.iter().map(|&i| g[i]).fold(f64::NEG_INFINITY, f64::max))
                        .collect();
                    let infsup = group_max.iter().copied().fold(f64::INFINITY, f64::min);
                    let mut group_of = vec![0usize; k];
                    for (gi, grp) in gamma_groups.iter().enumerate() {
                        for &i in grp {
                            group_of[i] = gi;
                        }
                    }
                    (0..k)
                        .map(|i| group_max[group_of[i]] - g[i].min(infsup))
                        .fold(f64::NEG_INFINITY, f64::max)
                }
            }
        })
        .collect();
    Ok(draws)
}

/// Two-sample Kolmogorov-Smirnov distance: the largest gap between the two
/// empirical CDFs over the pooled sample points.
pub fn ks_distance(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample { context: "ks_distance" });
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut dist: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        dist = dist.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(dist)
}

/// Single-column CSV export for simulated or empirical statistic samples.
pub fn write_sample_csv<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    writeln!(w, "value")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}
