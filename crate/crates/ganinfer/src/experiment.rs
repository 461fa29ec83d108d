//! Config-driven Monte Carlo experiments: solution-set consistency, coverage
//! of the step-down confidence sets, and the distributional limit check.
//!
//! Replication `r` of an experiment at sample size `n` derives its own seed
//! from the master seed, so replications are independent, reorderable, and
//! individually reproducible from the provenance carried in each report row.
//! Reports serialize to CSV (raw rows) and JSON (config echo plus per-n
//! summaries) with stable columns and byte-identical output for identical
//! configs, regardless of thread count.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{estimate_limit_covariance, ks_distance, simulate_limit_distribution};
use crate::error::{Error, Result};
use crate::estimation::{criterion_for_data, solution_set, SlacknessRule, TOL_POP};
use crate::grid::{directed_distance, hausdorff_distance, ParamGrid, ParamSet};
use crate::objective::{population_surface, MinimaxProblem, MonteCarloFallback};
use crate::rng::derive_seed;
use crate::subsampling::{step_down_confidence_set, sup_statistic, StopReason, SubsampleConfig};
use crate::testbed::{
    logistic_gan_problem, single_point_problem, two_point_problem, SinglePointSpec, TwoPointSpec,
};

const CONSISTENCY_TAG: u64 = 0xC0515;
const COVERAGE_TAG: u64 = 0xC07E;
const LIMIT_TAG: u64 = 0x11F17;
const DATASET_TAG: u64 = 0;
const PLAN_TAG: u64 = 1;
const COVARIANCE_TAG: u64 = 0xC0F;
const SIMULATION_TAG: u64 = 0x51;

/// Which testbed problem an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    /// Quadratic kernel with two symmetric population solutions.
    TwoPoint { mu: f64, sigma: f64 },
    /// Quadratic kernel with a unique population solution.
    SinglePoint { mu: f64, sigma: f64 },
    /// Affine generator against a logistic discriminator.
    LogisticGan {
        x_mean: f64,
        x_std: f64,
        #[serde(default = "default_logistic_bounds")]
        bounds: Vec<(f64, f64)>,
    },
    /// Constant kernel; every grid point solves the problem.
    Constant { value: f64 },
}

fn default_logistic_bounds() -> Vec<(f64, f64)> {
    vec![(-1.0, 1.0); 4]
}

impl ProblemSpec {
    pub fn build(&self) -> Result<MinimaxProblem> {
        match self {
            ProblemSpec::TwoPoint { mu, sigma } => {
                Ok(two_point_problem(&TwoPointSpec::new(*mu, *sigma)?))
            }
            ProblemSpec::SinglePoint { mu, sigma } => {
                Ok(single_point_problem(&SinglePointSpec::new(*mu, *sigma)?))
            }
            ProblemSpec::LogisticGan { x_mean, x_std, bounds } => {
                if bounds.len() != 4 {
                    return Err(Error::InvalidConfig(
                        "logistic bounds need 4 (lower, upper) pairs".into(),
                    ));
                }
                let bx = crate::grid::ParamBox::new(
                    vec![bounds[0].0, bounds[1].0],
                    vec![bounds[0].1, bounds[1].1],
                    vec![bounds[2].0, bounds[3].0],
                    vec![bounds[2].1, bounds[3].1],
                )?;
                logistic_gan_problem(*x_mean, *x_std, bx)
            }
            ProblemSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidConfig("constant kernel value must be finite".into()));
                }
                let v = *value;
                let kernel: Arc<crate::objective::KernelFn> = Arc::new(move |_, _, _, _| v);
                let sampler: Arc<crate::objective::SamplerFn> = Arc::new(|n, _| {
                    crate::objective::Dataset::new(vec![0.0; n], vec![0.0; n], 1, 1)
                        .expect("constant sampler rows")
                });
                let bounds = crate::grid::ParamBox::rect2((0.0, 1.0), (0.0, 1.0))?;
                Ok(MinimaxProblem::new(bounds, 1, 1, kernel, sampler)
                    .with_population(Arc::new(move |_: &[f64], _: &[f64]| v)))
            }
        }
    }
}

/// Slackness rule parameters as they appear in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlacknessSpec {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for SlacknessSpec {
    fn default() -> Self {
        Self { scale: 1.0, exponent: 0.49 }
    }
}

impl SlacknessSpec {
    pub fn rule(&self) -> Result<SlacknessRule> {
        SlacknessRule::new(self.scale, self.exponent)
    }
}

/// Subsampling parameters as they appear in config files; the plan seed is
/// derived per replication from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsamplingSpec {
    pub beta: f64,
    pub kappa: f64,
    pub num_subsamples: usize,
}

impl Default for SubsamplingSpec {
    fn default() -> Self {
        Self { beta: 1.0, kappa: 0.5, num_subsamples: 200 }
    }
}

impl SubsamplingSpec {
    fn config(&self, seed: u64) -> Result<SubsampleConfig> {
        SubsampleConfig::new(self.beta, self.kappa, self.num_subsamples, seed)
    }
}

fn default_limit_draws() -> usize {
    10_000
}

fn default_covariance_n() -> usize {
    100_000
}

/// Full experiment configuration; the JSON config file deserializes into
/// this structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub grid_counts: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    #[serde(default)]
    pub slackness: SlacknessSpec,
    #[serde(default)]
    pub subsampling: SubsamplingSpec,
    pub master_seed: u64,
    /// Draws from the simulated limit distribution (limit check only).
    #[serde(default = "default_limit_draws")]
    pub limit_draws: usize,
    /// Sample size for the limit-covariance estimate (limit check only).
    #[serde(default = "default_covariance_n")]
    pub covariance_sample_size: usize,
    /// Monte Carlo budget for population surfaces of problems without an
    /// analytic oracle.
    #[serde(default)]
    pub population_draws: Option<usize>,
    /// Default output directory; the CLI `--out-dir` flag overrides it. Not
    /// echoed into reports, so output bytes do not depend on where they are
    /// written.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<std::path::PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::InvalidConfig("sample_sizes must be non-empty".into()));
        }
        if !self.sample_sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("sample_sizes must be strictly increasing".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha { alpha: self.alpha });
        }
        self.slackness.rule()?;
        self.subsampling.config(0)?;
        if self.limit_draws == 0 {
            return Err(Error::InvalidConfig("limit_draws must be at least 1".into()));
        }
        if self.covariance_sample_size < 2 {
            return Err(Error::InvalidConfig("covariance_sample_size must be at least 2".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn build_problem(&self) -> Result<MinimaxProblem> {
        self.problem.build()
    }

    pub fn build_grid(&self, problem: &MinimaxProblem) -> Result<Arc<ParamGrid>> {
        ParamGrid::new(problem.bounds().clone(), self.grid_counts.clone())
    }

    fn population_fallback(&self) -> Option<MonteCarloFallback> {
        self.population_draws.map(|draws| MonteCarloFallback {
            draws,
            seed: derive_seed(self.master_seed, &[0xFA11]),
        })
    }
}

/// Grid ground truth: the grid points within `TOL_POP` of the known
/// solutions when the problem declares them, otherwise the contour set of
/// the population criterion at `TOL_POP`.
pub fn grid_truth_set(
    problem: &MinimaxProblem,
    grid: &Arc<ParamGrid>,
    fallback: Option<MonteCarloFallback>,
) -> Result<ParamSet> {
    if let Some(solutions) = problem.known_solutions() {
        let mut buf = vec![0.0; grid.dim()];
        let mask: Vec<bool> = (0..grid.total_points())
            .map(|i| {
                grid.write_point(i, &mut buf);
                solutions.iter().any(|s| {
                    let d2: f64 =
                        buf.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2.sqrt() <= TOL_POP
                })
            })
            .collect();
        let set = ParamSet::from_mask(Arc::clone(grid), mask)?;
        if set.cardinality() != solutions.len() {
            return Err(Error::InvalidConfig(format!(
                "grid captures {} of {} known solutions; choose counts that place them on nodes",
                set.cardinality(),
                solutions.len()
            )));
        }
        return Ok(set);
    }
    if !problem.has_population_oracle() && fallback.is_none() {
        return Err(Error::MissingGroundTruth);
    }
    let pop = population_surface(problem, grid, fallback)?;
    let bundle = crate::estimation::criterion_surface(pop.surface)?;
    solution_set(&bundle, TOL_POP)
}

/// Smallest sorted value whose empirical CDF reaches `p`.
fn order_quantile(values: &[f64], p: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    for (j, &x) in sorted.iter().enumerate() {
        if (j + 1) as f64 / m >= p {
            return x;
        }
    }
    *sorted.last().expect("non-empty")
}

fn median(values: &[f64]) -> f64 {
    order_quantile(values, 0.5)
}

// ---------------------------------------------------------------------------
// Consistency experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub tau: f64,
    pub d_hausdorff: f64,
    pub sup_est_to_pop: f64,
    pub sup_pop_to_est: f64,
    pub sup_est_to_pop_tau0: f64,
    pub cardinality_tau: usize,
    pub cardinality_tau0: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencySummary {
    pub n: usize,
    pub tau: f64,
    pub max_grid_spacing: f64,
    pub median_d_hausdorff: f64,
    pub q1_d_hausdorff: f64,
    pub q3_d_hausdorff: f64,
    pub median_sup_est_to_pop: f64,
    pub median_sup_pop_to_est: f64,
    pub median_sup_est_to_pop_tau0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub kind: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub summaries: Vec<ConsistencySummary>,
    pub rows: Vec<ConsistencyRow>,
}

/// Estimate the solution set at each sample size and measure its Hausdorff
/// and one-sided distances to the grid ground truth.
pub fn run_consistency_experiment(cfg: &ExperimentConfig) -> Result<ConsistencyReport> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let grid = cfg.build_grid(&problem)?;
    let truth = grid_truth_set(&problem, &grid, cfg.population_fallback())?;
    let rule = cfg.slackness.rule()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let max_spacing = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    for &n in &cfg.sample_sizes {
        let tau = rule.tau(n);
        let n_rows: Vec<ConsistencyRow> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(cfg.master_seed, &[CONSISTENCY_TAG, n as u64, r as u64]);
                let data = problem.sample(n, derive_seed(seed, &[DATASET_TAG]))?;
                let bundle = criterion_for_data(&problem, &data, &grid)?;
                let est_tau = solution_set(&bundle, tau)?;
                let est_zero = solution_set(&bundle, 0.0)?;
                Ok(ConsistencyRow {
                    n,
                    replication: r,
                    seed,
                    tau,
                    d_hausdorff: hausdorff_distance(&est_tau, &truth)?,
                    sup_est_to_pop: directed_distance(&est_tau, &truth)?,
                    sup_pop_to_est: directed_distance(&truth, &est_tau)?,
                    sup_est_to_pop_tau0: directed_distance(&est_zero, &truth)?,
                    cardinality_tau: est_tau.cardinality(),
                    cardinality_tau0: est_zero.cardinality(),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let dh: Vec<f64> = n_rows.iter().map(|r| r.d_hausdorff).collect();
        let one_sided: Vec<f64> = n_rows.iter().map(|r| r.sup_est_to_pop).collect();
        let pop_side: Vec<f64> = n_rows.iter().map(|r| r.sup_pop_to_est).collect();
        let tau0: Vec<f64> = n_rows.iter().map(|r| r.sup_est_to_pop_tau0).collect();
        summaries.push(ConsistencySummary {
            n,
            tau,
            max_grid_spacing: max_spacing,
            median_d_hausdorff: median(&dh),
            q1_d_hausdorff: order_quantile(&dh, 0.25),
            q3_d_hausdorff: order_quantile(&dh, 0.75),
            median_sup_est_to_pop: median(&one_sided),
            median_sup_pop_to_est: median(&pop_side),
            median_sup_est_to_pop_tau0: median(&tau0),
        });
        rows.extend(n_rows);
    }
    Ok(ConsistencyReport {
        kind: "consistency",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        summaries,
        rows,
    })
}

impl ConsistencyReport {
    pub fn write_rows_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "n,replication,seed,tau,d_hausdorff,sup_est_to_pop,sup_pop_to_est,\
             sup_est_to_pop_tau0,cardinality_tau,cardinality_tau0"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replication,
                r.seed,
                r.tau,
                r.d_hausdorff,
                r.sup_est_to_pop,
                r.sup_pop_to_est,
                r.sup_est_to_pop_tau0,
                r.cardinality_tau,
                r.cardinality_tau0
            )?;
        }
        Ok(())
    }

    pub fn write_files(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut csv = Vec::new();
        self.write_rows_csv(&mut csv)?;
        fs::write(dir.join("consistency_rows.csv"), csv)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(dir.join("consistency_report.json"), json)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Coverage experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub b: usize,
    pub num_subsamples: usize,
    pub covered: bool,
    pub iterations: usize,
    pub final_cardinality: usize,
    pub initial_sup_statistic: f64,
    pub initial_quantile: f64,
    pub strictly_nested: bool,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageSummary {
    pub n: usize,
    pub b: usize,
    pub replications: usize,
    pub coverage: f64,
    pub coverage_standard_error: f64,
    pub median_final_cardinality: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub kind: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub summaries: Vec<CoverageSummary>,
    pub rows: Vec<CoverageRow>,
}

/// Run the step-down confidence procedure per replication and record whether
/// the grid ground truth is covered.
pub fn run_coverage_experiment(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let grid = cfg.build_grid(&problem)?;
    let truth = grid_truth_set(&problem, &grid, cfg.population_fallback())?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in &cfg.sample_sizes {
        let n_rows: Vec<CoverageRow> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(cfg.master_seed, &[COVERAGE_TAG, n as u64, r as u64]);
                let data = problem.sample(n, derive_seed(seed, &[DATASET_TAG]))?;
                let sub_cfg = cfg.subsampling.config(derive_seed(seed, &[PLAN_TAG]))?;
                let result =
                    step_down_confidence_set(&problem, &data, &grid, cfg.alpha, &sub_cfg)?;
                let strictly_nested = result.iterations.windows(2).all(|w| {
                    w[1].set.cardinality() < w[0].set.cardinality()
                        && w[1].set.is_subset_of(&w[0].set).unwrap_or(false)
                });
                Ok(CoverageRow {
                    n,
                    replication: r,
                    seed,
                    b: result.subsample_size,
                    num_subsamples: result.num_subsamples,
                    covered: truth.is_subset_of(&result.final_set)?,
                    iterations: result.iterations.len(),
                    final_cardinality: result.final_set.cardinality(),
                    initial_sup_statistic: result.iterations[0].sup_statistic,
                    initial_quantile: result.iterations[0].quantile,
                    strictly_nested,
                    stop_reason: result.stop_reason,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let covered = n_rows.iter().filter(|r| r.covered).count() as f64;
        let reps = n_rows.len() as f64;
        let p = covered / reps;
        let finals: Vec<f64> = n_rows.iter().map(|r| r.final_cardinality as f64).collect();
        summaries.push(CoverageSummary {
            n,
            b: n_rows[0].b,
            replications: n_rows.len(),
            coverage: p,
            coverage_standard_error: (p * (1.0 - p) / reps).sqrt(),
            median_final_cardinality: median(&finals),
        });
        rows.extend(n_rows);
    }
    Ok(CoverageReport {
        kind: "coverage",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        summaries,
        rows,
    })
}

impl CoverageReport {
    pub fn write_rows_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "n,replication,seed,b,num_subsamples,covered,iterations,final_cardinality,\
             initial_sup_statistic,initial_quantile,strictly_nested,stop_reason"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replication,
                r.seed,
                r.b,
                r.num_subsamples,
                r.covered,
                r.iterations,
                r.final_cardinality,
                r.initial_sup_statistic,
                r.initial_quantile,
                r.strictly_nested,
                match r.stop_reason {
                    StopReason::Accepted => "accepted",
                    StopReason::FixpointGuard => "fixpoint_guard",
                }
            )?;
        }
        Ok(())
    }

    pub fn write_files(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut csv = Vec::new();
        self.write_rows_csv(&mut csv)?;
        fs::write(dir.join("coverage_rows.csv"), csv)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(dir.join("coverage_report.json"), json)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Limit check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub statistic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitSummary {
    pub n: usize,
    pub replications: usize,
    pub solution_count: usize,
    pub limit_draws: usize,
    pub covariance_sample_size: usize,
    pub covariance: Vec<Vec<f64>>,
    pub ks_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub kind: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub summaries: Vec<LimitSummary>,
    pub rows: Vec<LimitRow>,
    /// Simulated limit draws per sample size, in `sample_sizes` order.
    pub simulated: Vec<Vec<f64>>,
}

/// Collect the scaled criterion sup over the ground-truth set across
/// replications, simulate the max-minus-min Gaussian limit from an estimated
/// covariance, and report the two-sample Kolmogorov-Smirnov distance.
pub fn run_limit_check(cfg: &ExperimentConfig) -> Result<LimitReport> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let grid = cfg.build_grid(&problem)?;
    let truth = grid_truth_set(&problem, &grid, cfg.population_fallback())?;
    let points = truth.points();
    let dg = grid.gamma_dim();
    let distinct = |lo: usize, hi: usize| {
        (0..points.len()).all(|a| {
            (a + 1..points.len()).all(|b| points[a][lo..hi] != points[b][lo..hi])
        })
    };
    if !(distinct(0, dg) && distinct(dg, grid.dim())) {
        return Err(Error::SolutionsNotDistinct);
    }

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut simulated = Vec::new();
    for &n in &cfg.sample_sizes {
        let n_rows: Vec<LimitRow> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(cfg.master_seed, &[LIMIT_TAG, n as u64, r as u64]);
                let data = problem.sample(n, derive_seed(seed, &[DATASET_TAG]))?;
                let bundle = criterion_for_data(&problem, &data, &grid)?;
                let statistic =
                    sup_statistic(&bundle.criterion, &truth, (n as f64).sqrt())?;
                Ok(LimitRow { n, replication: r, seed, statistic })
            })
            .collect::<Result<Vec<_>>>()?;

        let cov_seed = derive_seed(cfg.master_seed, &[LIMIT_TAG, n as u64, COVARIANCE_TAG]);
        let cov_data = problem.sample(cfg.covariance_sample_size, cov_seed)?;
        let model = estimate_limit_covariance(&problem, &cov_data, &points)?;
        let sim_seed = derive_seed(cfg.master_seed, &[LIMIT_TAG, n as u64, SIMULATION_TAG]);
        let draws = simulate_limit_distribution(&model, cfg.limit_draws, sim_seed)?;
        let stats: Vec<f64> = n_rows.iter().map(|r| r.statistic).collect();
        let ks = ks_distance(&stats, &draws)?;
        let k = model.dim();
        summaries.push(LimitSummary {
            n,
            replications: n_rows.len(),
            solution_count: k,
            limit_draws: cfg.limit_draws,
            covariance_sample_size: cfg.covariance_sample_size,
            covariance: (0..k)
                .map(|i| (0..k).map(|j| model.covariance(i, j)).collect())
                .collect(),
            ks_distance: ks,
        });
        rows.extend(n_rows);
        simulated.push(draws);
    }
    Ok(LimitReport {
        kind: "limit_check",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        summaries,
        rows,
        simulated,
    })
}

impl LimitReport {
    pub fn write_rows_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,replication,seed,statistic")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.n, r.replication, r.seed, r.statistic)?;
        }
        Ok(())
    }

    pub fn write_files(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut csv = Vec::new();
        self.write_rows_csv(&mut csv)?;
        fs::write(dir.join("limit_rows.csv"), csv)?;
        for (summary, draws) in self.summaries.iter().zip(&self.simulated) {
            let mut sim = Vec::new();
            crate::asymptotics::write_sample_csv(&mut sim, draws)?;
            fs::write(dir.join(format!("limit_draws_n{}.csv", summary.n)), sim)?;
            let stats: Vec<f64> = self
                .rows
                .iter()
                .filter(|r| r.n == summary.n)
                .map(|r| r.statistic)
                .collect();
            let mut emp = Vec::new();
            crate::asymptotics::write_sample_csv(&mut emp, &stats)?;
            fs::write(dir.join(format!("limit_empirical_n{}.csv", summary.n)), emp)?;
        }
        // The JSON report stays readable: simulated draws live in the CSVs.
        let slim = LimitReport {
            kind: self.kind,
            version: self.version,
            config: self.config.clone(),
            summaries: self.summaries.clone(),
            rows: self.rows.clone(),
            simulated: Vec::new(),
        };
        let mut json = serde_json::to_string_pretty(&slim)?;
        json.push('\n');
        fs::write(dir.join("limit_report.json"), json)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_config() -> ExperimentConfig {
        ExperimentConfig {
            problem: ProblemSpec::TwoPoint { mu: 1.0, sigma: 0.2 },
            grid_counts: vec![21, 21],
            sample_sizes: vec![100, 200],
            replications: 4,
            alpha: 0.1,
            slackness: SlacknessSpec::default(),
            subsampling: SubsamplingSpec { beta: 1.0, kappa: 0.5, num_subsamples: 24 },
            master_seed: 7,
            limit_draws: 500,
            covariance_sample_size: 2_000,
            population_draws: None,
            out_dir: None,
        }
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut cfg = two_point_config();
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = two_point_config();
        cfg.sample_sizes = vec![200, 100];
        assert!(cfg.validate().is_err());
        let mut cfg = two_point_config();
        cfg.alpha = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = two_point_config();
        cfg.slackness.exponent = 0.5;
        assert!(cfg.validate().is_err());
        assert!(two_point_config().validate().is_ok());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = two_point_config();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn truth_set_finds_the_two_solutions() {
        let cfg = two_point_config();
        let problem = cfg.build_problem().unwrap();
        let grid = cfg.build_grid(&problem).unwrap();
        let truth = grid_truth_set(&problem, &grid, None).unwrap();
        assert_eq!(truth.cardinality(), 2);
    }

    #[test]
    fn zero_noise_problem_recovers_truth_exactly() {
        let mut cfg = two_point_config();
        cfg.problem = ProblemSpec::TwoPoint { mu: 1.0, sigma: 0.0 };
        // Large enough n that tau_n sits below the smallest nonzero value of
        // the (exact) criterion on this grid.
        cfg.sample_sizes = vec![1000, 2000];
        let report = run_consistency_experiment(&cfg).unwrap();
        for row in &report.rows {
            assert_eq!(row.d_hausdorff, 0.0);
            assert_eq!(row.sup_est_to_pop_tau0, 0.0);
        }
    }

    #[test]
    fn slack_never_shrinks_the_estimate() {
        let cfg = two_point_config();
        let report = run_consistency_experiment(&cfg).unwrap();
        for row in &report.rows {
            assert!(row.cardinality_tau >= row.cardinality_tau0);
            assert!(row.cardinality_tau0 >= 1);
        }
        assert_eq!(report.rows.len(), cfg.replications * cfg.sample_sizes.len());
    }

    #[test]
    fn replications_are_independent_of_the_batch() {
        let mut small = two_point_config();
        small.replications = 3;
        let mut large = two_point_config();
        large.replications = 4;
        let a = run_consistency_experiment(&small).unwrap();
        let b = run_consistency_experiment(&large).unwrap();
        for (x, y) in a.rows.iter().zip(b.rows.iter().filter(|r| r.replication < 3)) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.d_hausdorff, y.d_hausdorff);
        }
    }

    #[test]
    fn constant_problem_covers_with_full_grid() {
        let mut cfg = two_point_config();
        cfg.problem = ProblemSpec::Constant { value: 0.0 };
        cfg.grid_counts = vec![4, 4];
        cfg.sample_sizes = vec![30];
        cfg.replications = 3;
        let report = run_coverage_experiment(&cfg).unwrap();
        assert_eq!(report.summaries[0].coverage, 1.0);
        for row in &report.rows {
            assert_eq!(row.final_cardinality, 16);
            assert_eq!(row.iterations, 1);
        }
    }

    #[test]
    fn coverage_rows_carry_provenance() {
        let mut cfg = two_point_config();
        cfg.sample_sizes = vec![60];
        cfg.replications = 3;
        cfg.subsampling.num_subsamples = 16;
        let report = run_coverage_experiment(&cfg).unwrap();
        for row in &report.rows {
            assert!(row.strictly_nested);
            assert_eq!(row.b, 8); // round(sqrt(60))
            assert_eq!(row.num_subsamples, 16);
            assert!(row.stop_reason == StopReason::Accepted);
        }
    }

    #[test]
    fn alpha_ordering_nests_confidence_sets() {
        let cfg = two_point_config();
        let problem = cfg.build_problem().unwrap();
        let grid = cfg.build_grid(&problem).unwrap();
        let data = problem.sample(150, 42).unwrap();
        let sub = cfg.subsampling.config(9).unwrap();
        let tight = step_down_confidence_set(&problem, &data, &grid, 0.5, &sub).unwrap();
        let loose = step_down_confidence_set(&problem, &data, &grid, 0.1, &sub).unwrap();
        assert!(tight.final_set.is_subset_of(&loose.final_set).unwrap());
    }

    #[test]
    fn limit_check_runs_on_singleton_problem() {
        let mut cfg = two_point_config();
        // sigma^2 = 0.2 puts the unique solution at (1.25, 1.25), a node of
        // the 17-point axes.
        cfg.problem = ProblemSpec::SinglePoint { mu: 1.0, sigma: 0.2f64.sqrt() };
        cfg.grid_counts = vec![17, 17];
        cfg.sample_sizes = vec![400];
        cfg.replications = 20;
        cfg.limit_draws = 200;
        cfg.covariance_sample_size = 500;
        let report = run_limit_check(&cfg).unwrap();
        assert_eq!(report.summaries[0].solution_count, 1);
        // Both samples degenerate at zero.
        assert!(report.rows.iter().all(|r| r.statistic == 0.0));
        assert!(report.simulated[0].iter().all(|d| *d == 0.0));
        assert_eq!(report.summaries[0].ks_distance, 0.0);
    }

    #[test]
    fn limit_check_rejects_shared_coordinates() {
        let mut cfg = two_point_config();
        // mu = 0 gives the two solutions the same delta coordinate.
        cfg.problem = ProblemSpec::TwoPoint { mu: 0.0, sigma: 0.2 };
        cfg.sample_sizes = vec![100];
        cfg.replications = 2;
        assert!(matches!(run_limit_check(&cfg), Err(Error::SolutionsNotDistinct)));
    }

    #[test]
    fn logistic_without_population_budget_is_rejected() {
        let mut cfg = two_point_config();
        cfg.problem = ProblemSpec::LogisticGan {
            x_mean: 0.0,
            x_std: 1.0,
            bounds: default_logistic_bounds(),
        };
        cfg.grid_counts = vec![5, 5, 5, 5];
        cfg.sample_sizes = vec![50];
        cfg.replications = 2;
        assert!(matches!(
            run_consistency_experiment(&cfg),
            Err(Error::MissingGroundTruth)
        ));
        cfg.population_draws = Some(200);
        assert!(run_consistency_experiment(&cfg).is_ok());
    }
}
