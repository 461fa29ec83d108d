//! Compact parameter boxes, their finite discretizations, subsets of grid
//! points, and the set metrics used by the consistency experiments.
//!
//! The parameter space is a product `Theta = Gamma x Delta` of two axis
//! blocks. A [`ParamGrid`] discretizes the box uniformly with both endpoints
//! included; grid points are addressed by a flat index in row-major order
//! with the last axis fastest, gamma axes first. All suprema and infima over
//! the parameter space are exact maxima and minima over grid points.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Compact product box `Gamma x Delta` with non-empty interior.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    gamma_lower: Vec<f64>,
    gamma_upper: Vec<f64>,
    delta_lower: Vec<f64>,
    delta_upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(
        gamma_lower: Vec<f64>,
        gamma_upper: Vec<f64>,
        delta_lower: Vec<f64>,
        delta_upper: Vec<f64>,
    ) -> Result<Self> {
        if gamma_lower.len() != gamma_upper.len() {
            return Err(Error::DimensionMismatch {
                context: "gamma bounds",
                expected: gamma_lower.len(),
                actual: gamma_upper.len(),
            });
        }
        if delta_lower.len() != delta_upper.len() {
            return Err(Error::DimensionMismatch {
                context: "delta bounds",
                expected: delta_lower.len(),
                actual: delta_upper.len(),
            });
        }
        if gamma_lower.is_empty() {
            return Err(Error::DimensionMismatch { context: "gamma block", expected: 1, actual: 0 });
        }
        if delta_lower.is_empty() {
            return Err(Error::DimensionMismatch { context: "delta block", expected: 1, actual: 0 });
        }
        let lowers = gamma_lower.iter().chain(delta_lower.iter());
        let uppers = gamma_upper.iter().chain(delta_upper.iter());
        for (axis, (lo, hi)) in lowers.zip(uppers).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::EmptyBoxInterior { axis, lower: *lo, upper: *hi });
            }
        }
        Ok(Self { gamma_lower, gamma_upper, delta_lower, delta_upper })
    }

    /// Box with a single gamma axis and a single delta axis.
    pub fn rect2(gamma: (f64, f64), delta: (f64, f64)) -> Result<Self> {
        Self::new(vec![gamma.0], vec![gamma.1], vec![delta.0], vec![delta.1])
    }

    pub fn gamma_dim(&self) -> usize {
        self.gamma_lower.len()
    }

    pub fn delta_dim(&self) -> usize {
        self.delta_lower.len()
    }

    /// Total number of axes, gamma block first.
    pub fn dim(&self) -> usize {
        self.gamma_dim() + self.delta_dim()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        let dg = self.gamma_dim();
        if axis < dg { self.gamma_lower[axis] } else { self.delta_lower[axis - dg] }
    }

    pub fn upper(&self, axis: usize) -> f64 {
        let dg = self.gamma_dim();
        if axis < dg { self.gamma_upper[axis] } else { self.delta_upper[axis - dg] }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .enumerate()
                .all(|(axis, t)| *t >= self.lower(axis) && *t <= self.upper(axis))
    }
}

/// Uniform, endpoint-inclusive discretization of a [`ParamBox`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    bounds: ParamBox,
    counts: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
    delta_total: usize,
}

impl ParamGrid {
    /// Build a grid with `counts[axis]` points per axis (each at least 2).
    ///
    /// Flat index 0 maps to the all-lower-bounds corner and the last index to
    /// the all-upper-bounds corner; interior axis values are the convex
    /// combinations `(lower*(count-1-i) + upper*i)/(count-1)`, a form that is
    /// exactly antisymmetric for symmetric bounds.
    pub fn new(bounds: ParamBox, counts: Vec<usize>) -> Result<Arc<Self>> {
        if counts.len() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                context: "grid counts",
                expected: bounds.dim(),
                actual: counts.len(),
            });
        }
        for (axis, &c) in counts.iter().enumerate() {
            if c < 2 {
                return Err(Error::CountTooSmall { axis, count: c });
            }
        }
        let mut strides = vec![1usize; counts.len()];
        for axis in (0..counts.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * counts[axis + 1];
        }
        let total = counts.iter().product();
        let delta_total = counts[bounds.gamma_dim()..].iter().product();
        Ok(Arc::new(Self { bounds, counts, strides, total, delta_total }))
    }

    pub fn bounds(&self) -> &ParamBox {
        &self.bounds
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total_points(&self) -> usize {
        self.total
    }

    pub fn gamma_dim(&self) -> usize {
        self.bounds.gamma_dim()
    }

    pub fn delta_dim(&self) -> usize {
        self.bounds.delta_dim()
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Number of points of the gamma-marginal grid.
    pub fn gamma_points(&self) -> usize {
        self.total / self.delta_total
    }

    /// Number of points of the delta block per gamma point.
    pub fn delta_points(&self) -> usize {
        self.delta_total
    }

    /// Coordinate of grid node `i` on `axis`.
    pub fn axis_value(&self, axis: usize, i: usize) -> f64 {
        let c = self.counts[axis];
        debug_assert!(i < c);
        let lo = self.bounds.lower(axis);
        let hi = self.bounds.upper(axis);
        if i == 0 {
            lo
        } else if i == c - 1 {
            hi
        } else {
            let m = (c - 1) as f64;
            (lo * ((c - 1 - i) as f64) + hi * (i as f64)) / m
        }
    }

    /// Per-axis grid spacing.
    pub fn spacing(&self, axis: usize) -> f64 {
        (self.bounds.upper(axis) - self.bounds.lower(axis)) / (self.counts[axis] - 1) as f64
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.total);
        self.strides.iter().zip(&self.counts).map(|(s, c)| (flat / s) % c).collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.counts.len());
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Full coordinates of the grid point at `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut buf = vec![0.0; self.dim()];
        self.write_point(flat, &mut buf);
        buf
    }

    pub fn write_point(&self, flat: usize, buf: &mut [f64]) {
        debug_assert_eq!(buf.len(), self.dim());
        for (axis, slot) in buf.iter_mut().enumerate() {
            let i = (flat / self.strides[axis]) % self.counts[axis];
            *slot = self.axis_value(axis, i);
        }
    }

    /// Gamma-marginal flat index of a full flat index.
    pub fn gamma_flat(&self, flat: usize) -> usize {
        flat / self.delta_total
    }

    /// Delta-block flat index of a full flat index.
    pub fn delta_flat(&self, flat: usize) -> usize {
        flat % self.delta_total
    }

    /// Full flat index from marginal indices.
    pub fn compose_flat(&self, gamma_flat: usize, delta_flat: usize) -> usize {
        gamma_flat * self.delta_total + delta_flat
    }

    /// Gamma coordinates of a gamma-marginal flat index.
    pub fn gamma_point(&self, gamma_flat: usize) -> Vec<f64> {
        let full = self.point(self.compose_flat(gamma_flat, 0));
        full[..self.gamma_dim()].to_vec()
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| {
                let w = self.bounds.upper(a) - self.bounds.lower(a);
                w * w
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn same_grid(a: &Arc<ParamGrid>, b: &Arc<ParamGrid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Domain of a [`GridFunction`]: the full product grid or its gamma marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Full,
    GammaMarginal,
}

/// Real-valued surface tabulated over a grid (or its gamma marginal).
/// Values are validated finite at construction.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<ParamGrid>,
    domain: Domain,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new_full(grid: Arc<ParamGrid>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, Domain::Full, values)
    }

    pub fn new_gamma(grid: Arc<ParamGrid>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, Domain::GammaMarginal, values)
    }

    fn new(grid: Arc<ParamGrid>, domain: Domain, values: Vec<f64>) -> Result<Self> {
        let expected = match domain {
            Domain::Full => grid.total_points(),
            Domain::GammaMarginal => grid.gamma_points(),
        };
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "grid function values",
                expected,
                actual: values.len(),
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index, value: v });
            }
        }
        Ok(Self { grid, domain, values })
    }

    /// Tabulate a closure over the full grid.
    pub fn tabulate(grid: &Arc<ParamGrid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut buf = vec![0.0; grid.dim()];
        let values = (0..grid.total_points())
            .map(|i| {
                grid.write_point(i, &mut buf);
                f(&buf)
            })
            .collect();
        Self::new_full(Arc::clone(grid), values)
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute pointwise difference against another surface.
    pub fn sup_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        if self.domain != other.domain {
            return Err(Error::DomainMismatch { context: "sup_abs_diff" });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Surface `self + t * h`, used by finite-difference checks.
    pub fn perturbed(&self, h: &GridFunction, t: f64) -> Result<GridFunction> {
        if !same_grid(&self.grid, &h.grid) {
            return Err(Error::GridMismatch);
        }
        if self.domain != h.domain {
            return Err(Error::DomainMismatch { context: "perturbed" });
        }
        let values = self.values.iter().zip(&h.values).map(|(x, d)| x + t * d).collect();
        GridFunction::new(Arc::clone(&self.grid), self.domain, values)
    }
}

/// Subset of the grid, stored as a membership mask over flat indices.
#[derive(Debug, Clone)]
pub struct ParamSet {
    grid: Arc<ParamGrid>,
    mask: Vec<bool>,
    cardinality: usize,
}

impl ParamSet {
    pub fn from_mask(grid: Arc<ParamGrid>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.total_points() {
            return Err(Error::DimensionMismatch {
                context: "set mask",
                expected: grid.total_points(),
                actual: mask.len(),
            });
        }
        let cardinality = mask.iter().filter(|m| **m).count();
        Ok(Self { grid, mask, cardinality })
    }

    pub fn from_indices(grid: Arc<ParamGrid>, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; grid.total_points()];
        for &i in indices {
            if i >= mask.len() {
                return Err(Error::DimensionMismatch {
                    context: "set index",
                    expected: mask.len(),
                    actual: i,
                });
            }
            mask[i] = true;
        }
        Self::from_mask(grid, mask)
    }

    /// The whole grid as a set.
    pub fn full(grid: Arc<ParamGrid>) -> Self {
        let mask = vec![true; grid.total_points()];
        let cardinality = mask.len();
        Self { grid, mask, cardinality }
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        &self.grid
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.mask[flat]
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality == 0
    }

    /// Member flat indices in increasing order.
    pub fn indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.then_some(i))
            .collect()
    }

    /// Member coordinates, in flat-index order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.indices().into_iter().map(|i| self.grid.point(i)).collect()
    }

    pub fn is_subset_of(&self, other: &ParamSet) -> Result<bool> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b))
    }

    pub fn intersection(&self, other: &ParamSet) -> Result<ParamSet> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        ParamSet::from_mask(Arc::clone(&self.grid), mask)
    }

    /// Write member coordinates as CSV (`flat_index,<axis values...>`).
    pub fn write_member_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let dg = self.grid.gamma_dim();
        let dd = self.grid.delta_dim();
        let mut header = String::from("flat_index");
        for k in 0..dg {
            header.push_str(&format!(",gamma_{k}"));
        }
        for k in 0..dd {
            header.push_str(&format!(",delta_{k}"));
        }
        writeln!(w, "{header}")?;
        for i in self.indices() {
            let p = self.grid.point(i);
            let coords: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{i},{}", coords.join(","))?;
        }
        Ok(())
    }
}

impl PartialEq for ParamSet {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.mask == other.mask
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Shortest Euclidean distance from a point to a non-empty set of grid points.
pub fn point_to_set_distance(p: &[f64], set: &ParamSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet { context: "point_to_set_distance" });
    }
    if p.len() != set.grid.dim() {
        return Err(Error::DimensionMismatch {
            context: "point coordinates",
            expected: set.grid.dim(),
            actual: p.len(),
        });
    }
    let mut buf = vec![0.0; set.grid.dim()];
    let mut best = f64::INFINITY;
    for i in 0..set.mask.len() {
        if set.mask[i] {
            set.grid.write_point(i, &mut buf);
            best = best.min(euclidean(p, &buf));
        }
    }
    Ok(best)
}

/// One-sided distance `max_{a in A} d(a, B)`.
pub fn directed_distance(a: &ParamSet, b: &ParamSet) -> Result<f64> {
    if !same_grid(&a.grid, &b.grid) {
        return Err(Error::GridMismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet { context: "directed_distance" });
    }
    let b_points = b.points();
    let mut buf = vec![0.0; a.grid.dim()];
    let mut worst: f64 = 0.0;
    for i in 0..a.mask.len() {
        if a.mask[i] {
            a.grid.write_point(i, &mut buf);
            let nearest = b_points
                .iter()
                .map(|q| euclidean(&buf, q))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    Ok(worst)
}

/// Hausdorff distance between two non-empty sets on the same grid.
pub fn hausdorff_distance(a: &ParamSet, b: &ParamSet) -> Result<f64> {
    Ok(directed_distance(a, b)?.max(directed_distance(b, a)?))
}

/// All grid points within `eps` of the set: `{theta : d(theta, S) <= eps}`.
pub fn epsilon_expansion(set: &ParamSet, eps: f64) -> Result<ParamSet> {
    if eps < 0.0 {
        return Err(Error::NegativeLevel { context: "epsilon_expansion", value: eps });
    }
    if set.is_empty() {
        return Err(Error::EmptySet { context: "epsilon_expansion" });
    }
    let grid = Arc::clone(&set.grid);
    let members = set.points();
    let mut buf = vec![0.0; grid.dim()];
    let mask = (0..grid.total_points())
        .map(|i| {
            grid.write_point(i, &mut buf);
            members.iter().any(|q| euclidean(&buf, q) <= eps)
        })
        .collect();
    ParamSet::from_mask(grid, mask)
}
