//! Minimax kernels, i.i.d. datasets, and objective surfaces.
//!
//! A [`MinimaxProblem`] bundles the kernel `F(x, z, gamma, delta)`, an
//! optional closed-form population objective `f(gamma, delta) = E[F]`, an
//! optional list of known population solutions, and a seeded sampler that
//! produces paired i.i.d. rows `(X_i, Z_i)`. Sample surfaces tabulate the
//! empirical mean of the kernel over a grid; population surfaces use the
//! oracle when present and fall back to seeded Monte Carlo otherwise.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, ParamBox, ParamGrid};

/// Paired i.i.d. sample rows, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    z: Vec<f64>,
    n: usize,
    x_dim: usize,
    z_dim: usize,
}

impl Dataset {
    pub fn new(x: Vec<f64>, z: Vec<f64>, x_dim: usize, z_dim: usize) -> Result<Self> {
        if x_dim == 0 || z_dim == 0 {
            return Err(Error::DimensionMismatch {
                context: "dataset row width",
                expected: 1,
                actual: 0,
            });
        }
        if !x.len().is_multiple_of(x_dim) {
            return Err(Error::DimensionMismatch {
                context: "x storage",
                expected: x_dim,
                actual: x.len(),
            });
        }
        let n = x.len() / x_dim;
        if n == 0 {
            return Err(Error::EmptySample { context: "dataset" });
        }
        if z.len() != n * z_dim {
            return Err(Error::DimensionMismatch {
                context: "z storage",
                expected: n * z_dim,
                actual: z.len(),
            });
        }
        Ok(Self { x, z, n, x_dim, z_dim })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.x_dim..(i + 1) * self.x_dim]
    }

    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i * self.z_dim..(i + 1) * self.z_dim]
    }

    /// Rows of both datasets, `self` first.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.x_dim != other.x_dim || self.z_dim != other.z_dim {
            return Err(Error::DimensionMismatch {
                context: "dataset concat",
                expected: self.x_dim,
                actual: other.x_dim,
            });
        }
        let mut x = self.x.clone();
        x.extend_from_slice(&other.x);
        let mut z = self.z.clone();
        z.extend_from_slice(&other.z);
        Dataset::new(x, z, self.x_dim, self.z_dim)
    }

    /// Rows selected by index, keeping the (X, Z) pairing.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::EmptySample { context: "dataset subset" });
        }
        let mut x = Vec::with_capacity(indices.len() * self.x_dim);
        let mut z = Vec::with_capacity(indices.len() * self.z_dim);
        for &i in indices {
            if i >= self.n {
                return Err(Error::DimensionMismatch {
                    context: "subset row index",
                    expected: self.n,
                    actual: i,
                });
            }
            x.extend_from_slice(self.x_row(i));
            z.extend_from_slice(self.z_row(i));
        }
        Dataset::new(x, z, self.x_dim, self.z_dim)
    }

    /// CSV export: header `x_0..x_{dX-1},z_0..z_{dZ-1}`, one sample per row,
    /// shortest round-trip decimal formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = Vec::with_capacity(self.x_dim + self.z_dim);
        for k in 0..self.x_dim {
            header.push(format!("x_{k}"));
        }
        for k in 0..self.z_dim {
            header.push(format!("z_{k}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n {
            let fields: Vec<String> = self
                .x_row(i)
                .iter()
                .chain(self.z_row(i))
                .map(|v| format!("{v}"))
                .collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Dataset> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or(Error::CsvParse { line: 1, message: "missing header".into() })??;
        let cols: Vec<&str> = header.split(',').collect();
        let x_dim = cols.iter().filter(|c| c.starts_with("x_")).count();
        let z_dim = cols.iter().filter(|c| c.starts_with("z_")).count();
        if x_dim == 0 || z_dim == 0 || x_dim + z_dim != cols.len() {
            return Err(Error::CsvParse { line: 1, message: format!("bad header `{header}`") });
        }
        let mut x = Vec::new();
        let mut z = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != x_dim + z_dim {
                return Err(Error::CsvParse {
                    line: lineno + 2,
                    message: format!("expected {} fields, got {}", x_dim + z_dim, fields.len()),
                });
            }
            for (k, field) in fields.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::CsvParse {
                    line: lineno + 2,
                    message: format!("bad float `{field}`"),
                })?;
                if k < x_dim {
                    x.push(v);
                } else {
                    z.push(v);
                }
            }
        }
        Dataset::new(x, z, x_dim, z_dim)
    }
}

/// Deterministic kernel evaluator `(x, z, gamma, delta) -> f64`.
pub type KernelFn = dyn Fn(&[f64], &[f64], &[f64], &[f64]) -> f64 + Send + Sync;
/// Population objective evaluator `(gamma, delta) -> f64`.
pub type PopulationFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
/// Seeded sampler producing `n` paired rows.
pub type SamplerFn = dyn Fn(usize, u64) -> Dataset + Send + Sync;

/// A minimax estimation problem: kernel, parameter box, sampler, and optional
/// population-side ground truth.
#[derive(Clone)]
pub struct MinimaxProblem {
    bounds: ParamBox,
    x_dim: usize,
    z_dim: usize,
    kernel: Arc<KernelFn>,
    population: Option<Arc<PopulationFn>>,
    known_solutions: Option<Vec<Vec<f64>>>,
    sampler: Arc<SamplerFn>,
}

impl std::fmt::Debug for MinimaxProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinimaxProblem")
            .field("bounds", &self.bounds)
            .field("x_dim", &self.x_dim)
            .field("z_dim", &self.z_dim)
            .field("has_population", &self.population.is_some())
            .field("known_solutions", &self.known_solutions)
            .finish()
    }
}

impl MinimaxProblem {
    pub fn new(
        bounds: ParamBox,
        x_dim: usize,
        z_dim: usize,
        kernel: Arc<KernelFn>,
        sampler: Arc<SamplerFn>,
    ) -> Self {
        Self { bounds, x_dim, z_dim, kernel, population: None, known_solutions: None, sampler }
    }

    pub fn with_population(mut self, population: Arc<PopulationFn>) -> Self {
        self.population = Some(population);
        self
    }

    pub fn with_known_solutions(mut self, solutions: Vec<Vec<f64>>) -> Self {
        self.known_solutions = Some(solutions);
        self
    }

    pub fn bounds(&self) -> &ParamBox {
        &self.bounds
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }

    pub fn has_population_oracle(&self) -> bool {
        self.population.is_some()
    }

    pub fn known_solutions(&self) -> Option<&[Vec<f64>]> {
        self.known_solutions.as_deref()
    }

    /// Draw `n` paired rows; deterministic per seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptySample { context: "sample" });
        }
        Ok((self.sampler)(n, seed))
    }

    /// Split a full parameter vector into its gamma and delta blocks.
    pub fn split_theta<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        theta.split_at(self.bounds.gamma_dim())
    }

    /// Raw kernel call without validation; used by the hot surface loops.
    #[inline]
    fn kernel_raw(&self, x: &[f64], z: &[f64], gamma: &[f64], delta: &[f64]) -> f64 {
        (self.kernel)(x, z, gamma, delta)
    }

    /// Population oracle value at a point, if an oracle is attached.
    pub fn population_value(&self, gamma: &[f64], delta: &[f64]) -> Option<f64> {
        self.population.as_ref().map(|f| f(gamma, delta))
    }
}

/// Validated single kernel evaluation. Rejects dimension mismatches, points
/// outside the box, and non-finite kernel output.
pub fn eval_kernel(problem: &MinimaxProblem, x: &[f64], z: &[f64], theta: &[f64]) -> Result<f64> {
    if x.len() != problem.x_dim {
        return Err(Error::DimensionMismatch {
            context: "x vector",
            expected: problem.x_dim,
            actual: x.len(),
        });
    }
    if z.len() != problem.z_dim {
        return Err(Error::DimensionMismatch {
            context: "z vector",
            expected: problem.z_dim,
            actual: z.len(),
        });
    }
    if !problem.bounds.contains(theta) {
        return Err(Error::PointOutsideBox { theta: theta.to_vec() });
    }
    let (gamma, delta) = problem.split_theta(theta);
    let value = problem.kernel_raw(x, z, gamma, delta);
    if !value.is_finite() {
        return Err(Error::NonFiniteKernel { row: None, theta: theta.to_vec(), value });
    }
    Ok(value)
}

/// Tabulate the sample objective `(1/n) sum_i F(X_i, Z_i, theta)` over the
/// grid. Grid points are filled by concurrent workers; the per-point row sum
/// runs in index order, so the result is independent of scheduling.
pub fn sample_surface(
    problem: &MinimaxProblem,
    data: &Dataset,
    grid: &Arc<ParamGrid>,
) -> Result<GridFunction> {
    if data.n() == 0 {
        return Err(Error::EmptySample { context: "sample_surface" });
    }
    if data.x_dim() != problem.x_dim || data.z_dim() != problem.z_dim {
        return Err(Error::DimensionMismatch {
            context: "dataset row width",
            expected: problem.x_dim,
            actual: data.x_dim(),
        });
    }
    let dg = grid.gamma_dim();
    let n = data.n();
    let values: Vec<f64> = (0..grid.total_points())
        .into_par_iter()
        .map(|flat| {
            let mut theta = vec![0.0; grid.dim()];
            grid.write_point(flat, &mut theta);
            let (gamma, delta) = theta.split_at(dg);
            let mut sum = 0.0;
            for i in 0..n {
                let v = problem.kernel_raw(data.x_row(i), data.z_row(i), gamma, delta);
                if !v.is_finite() {
                    return Err(Error::NonFiniteKernel {
                        row: Some(i),
                        theta: theta.clone(),
                        value: v,
                    });
                }
                sum += v;
            }
            Ok(sum / n as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new_full(Arc::clone(grid), values)
}

/// Monte Carlo budget for population surfaces without an analytic oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloFallback {
    pub draws: usize,
    pub seed: u64,
}

/// How a population surface was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationSource {
    Analytic,
    MonteCarlo { draws: usize, max_standard_error: f64 },
}

/// Population objective tabulated over a grid, with Monte Carlo error
/// information when no analytic oracle was available.
#[derive(Debug, Clone)]
pub struct PopulationSurface {
    pub surface: GridFunction,
    /// Per-point standard error of the Monte Carlo mean (absent for oracles).
    pub standard_error: Option<GridFunction>,
    pub source: PopulationSource,
}

/// Tabulate the population objective `f(gamma, delta)` over the grid.
///
/// Prefers the analytic oracle; otherwise draws one fixed-seed Monte Carlo
/// sample shared across all grid points and reports per-point standard
/// errors.
pub fn population_surface(
    problem: &MinimaxProblem,
    grid: &Arc<ParamGrid>,
    fallback: Option<MonteCarloFallback>,
) -> Result<PopulationSurface> {
    let dg = grid.gamma_dim();
    if let Some(oracle) = &problem.population {
        let values: Vec<f64> = (0..grid.total_points())
            .into_par_iter()
            .map(|flat| {
                let mut theta = vec![0.0; grid.dim()];
                grid.write_point(flat, &mut theta);
                let (gamma, delta) = theta.split_at(dg);
                let v = oracle(gamma, delta);
                if !v.is_finite() {
                    return Err(Error::NonFiniteKernel { row: None, theta, value: v });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        return Ok(PopulationSurface {
            surface: GridFunction::new_full(Arc::clone(grid), values)?,
            standard_error: None,
            source: PopulationSource::Analytic,
        });
    }

    let mc = fallback.ok_or(Error::MissingPopulationOracle)?;
    if mc.draws < 2 {
        return Err(Error::SampleTooSmall { context: "monte carlo fallback", n: mc.draws, minimum: 2 });
    }
    let synth = problem.sample(mc.draws, mc.seed)?;
    let m = synth.n() as f64;
    let stats: Vec<(f64, f64)> = (0..grid.total_points())
        .into_par_iter()
        .map(|flat| {
            let mut theta = vec![0.0; grid.dim()];
            grid.write_point(flat, &mut theta);
            let (gamma, delta) = theta.split_at(dg);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for i in 0..synth.n() {
                let v = problem.kernel_raw(synth.x_row(i), synth.z_row(i), gamma, delta);
                if !v.is_finite() {
                    return Err(Error::NonFiniteKernel {
                        row: Some(i),
                        theta: theta.clone(),
                        value: v,
                    });
                }
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / m;
            let var = ((sumsq - sum * sum / m) / (m - 1.0)).max(0.0);
            Ok((mean, (var / m).sqrt()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (means, ses): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
    let max_standard_error = ses.iter().copied().fold(0.0, f64::max);
    Ok(PopulationSurface {
        surface: GridFunction::new_full(Arc::clone(grid), means)?,
        standard_error: Some(GridFunction::new_full(Arc::clone(grid), ses)?),
        source: PopulationSource::MonteCarlo { draws: mc.draws, max_standard_error },
    })
}

/// Monte Carlo estimate of the population objective at selected points only.
/// Returns `(mean, standard_error)` per point.
pub fn population_mc_at(
    problem: &MinimaxProblem,
    thetas: &[Vec<f64>],
    draws: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if draws < 2 {
        return Err(Error::SampleTooSmall { context: "monte carlo evaluation", n: draws, minimum: 2 });
    }
    let synth = problem.sample(draws, seed)?;
    let m = synth.n() as f64;
    thetas
        .iter()
        .map(|theta| {
            let (gamma, delta) = problem.split_theta(theta);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for i in 0..synth.n() {
                let v = problem.kernel_raw(synth.x_row(i), synth.z_row(i), gamma, delta);
                if !v.is_finite() {
                    return Err(Error::NonFiniteKernel {
                        row: Some(i),
                        theta: theta.clone(),
                        value: v,
                    });
                }
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / m;
            let var = ((sumsq - sum * sum / m) / (m - 1.0)).max(0.0);
            Ok((mean, (var / m).sqrt()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ParamBox;

    fn toy_problem() -> MinimaxProblem {
        // F(x, z, gamma, delta) = -(delta - x*gamma)^2 + (gamma^2 - 1)^2
        let kernel: Arc<KernelFn> = Arc::new(|x, _z, gamma, delta| {
            let r = delta[0] - x[0] * gamma[0];
            let s = gamma[0] * gamma[0] - 1.0;
            -r * r + s * s
        });
        let sampler: Arc<SamplerFn> = Arc::new(|n, _seed| {
            Dataset::new(vec![0.0; n], vec![0.0; n], 1, 1).unwrap()
        });
        let bounds = ParamBox::rect2((-2.0, 2.0), (-2.0, 2.0)).unwrap();
        MinimaxProblem::new(bounds, 1, 1, kernel, sampler)
    }

    #[test]
    fn kernel_point_values() {
        let p = toy_problem();
        assert_eq!(eval_kernel(&p, &[1.0], &[0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(eval_kernel(&p, &[1.0], &[0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            eval_kernel(&p, &[1.0], &[0.0], &[3.0, 0.0]),
            Err(Error::PointOutsideBox { .. })
        ));
        assert!(eval_kernel(&p, &[1.0, 2.0], &[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn non_finite_kernel_is_reported_with_location() {
        let kernel: Arc<KernelFn> =
            Arc::new(|x, _z, _g, _d| if x[0] > 0.5 { f64::NAN } else { 0.0 });
        let sampler: Arc<SamplerFn> =
            Arc::new(|n, _| Dataset::new((0..n).map(|i| i as f64).collect(), vec![0.0; n], 1, 1).unwrap());
        let bounds = ParamBox::rect2((0.0, 1.0), (0.0, 1.0)).unwrap();
        let p = MinimaxProblem::new(bounds.clone(), 1, 1, kernel, sampler);
        let grid = ParamGrid::new(bounds, vec![2, 2]).unwrap();
        let data = p.sample(3, 0).unwrap();
        match sample_surface(&p, &data, &grid) {
            Err(Error::NonFiniteKernel { row: Some(1), .. }) => {}
            other => panic!("expected non-finite kernel at row 1, got {other:?}"),
        }
    }

    #[test]
    fn surface_of_single_row_equals_kernel() {
        let p = toy_problem();
        let data = Dataset::new(vec![1.5], vec![0.0], 1, 1).unwrap();
        let grid = ParamGrid::new(p.bounds().clone(), vec![5, 5]).unwrap();
        let surf = sample_surface(&p, &data, &grid).unwrap();
        for flat in 0..grid.total_points() {
            let theta = grid.point(flat);
            let direct = eval_kernel(&p, &[1.5], &[0.0], &theta).unwrap();
            assert_eq!(surf.value(flat), direct);
        }
    }

    #[test]
    fn duplicated_rows_leave_surface_unchanged() {
        let p = toy_problem();
        let data = Dataset::new(vec![0.3, -1.2], vec![0.1, 0.9], 1, 1).unwrap();
        let doubled = data.concat(&data).unwrap();
        let grid = ParamGrid::new(p.bounds().clone(), vec![7, 7]).unwrap();
        let a = sample_surface(&p, &data, &grid).unwrap();
        let b = sample_surface(&p, &doubled, &grid).unwrap();
        for flat in 0..grid.total_points() {
            assert!((a.value(flat) - b.value(flat)).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_hand_mean() {
        let p = toy_problem();
        let data = Dataset::new(vec![0.0, 2.0], vec![0.0, 0.0], 1, 1).unwrap();
        let grid = ParamGrid::new(p.bounds().clone(), vec![5, 5]).unwrap();
        let surf = sample_surface(&p, &data, &grid).unwrap();
        // (gamma, delta) = (1, 1): mean of {-(1-0)^2 + 0, -(1-2)^2 + 0} = -1.
        let flat = grid
            .flat_index(&[3, 3]); // axis values {-2,-1,0,1,2}: index 3 -> 1.0
        assert_eq!(grid.point(flat), vec![1.0, 1.0]);
        assert_eq!(surf.value(flat), -1.0);
    }

    #[test]
    fn concatenation_is_weighted_average() {
        let p = toy_problem();
        let a = Dataset::new(vec![0.5, 1.5, -0.7], vec![0.0, 0.1, 0.2], 1, 1).unwrap();
        let b = Dataset::new(vec![2.0, -1.0], vec![0.3, 0.4], 1, 1).unwrap();
        let grid = ParamGrid::new(p.bounds().clone(), vec![6, 6]).unwrap();
        let sa = sample_surface(&p, &a, &grid).unwrap();
        let sb = sample_surface(&p, &b, &grid).unwrap();
        let sc = sample_surface(&p, &a.concat(&b).unwrap(), &grid).unwrap();
        let (na, nb) = (a.n() as f64, b.n() as f64);
        for flat in 0..grid.total_points() {
            let blend = (na * sa.value(flat) + nb * sb.value(flat)) / (na + nb);
            assert!((sc.value(flat) - blend).abs() < 1e-12);
        }
    }

    #[test]
    fn population_requires_oracle_or_budget() {
        let p = toy_problem();
        let grid = ParamGrid::new(p.bounds().clone(), vec![3, 3]).unwrap();
        assert!(matches!(
            population_surface(&p, &grid, None),
            Err(Error::MissingPopulationOracle)
        ));
    }

    #[test]
    fn dataset_csv_round_trips_bitwise() {
        let data = Dataset::new(
            vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0, f64::MIN_POSITIVE, 42.0],
            vec![0.9, 0.99, 0.999],
            2,
            1,
        )
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(&buf[..]).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn subset_preserves_pairing() {
        let data = Dataset::new(vec![1.0, 2.0, 3.0], vec![10.0, 20.0, 30.0], 1, 1).unwrap();
        let sub = data.subset(&[2, 0]).unwrap();
        assert_eq!(sub.x_row(0), &[3.0]);
        assert_eq!(sub.z_row(0), &[30.0]);
        assert_eq!(sub.x_row(1), &[1.0]);
        assert_eq!(sub.z_row(1), &[10.0]);
    }

    #[test]
    fn single_row_dataset_accepted() {
        assert!(Dataset::new(vec![1.0], vec![0.5], 1, 1).is_ok());
        assert!(Dataset::new(vec![], vec![], 1, 1).is_err());
    }
}
