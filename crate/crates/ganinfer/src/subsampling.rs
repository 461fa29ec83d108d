//! Subsample plans, subsample criterion statistics, empirical quantiles, and
//! the step-down construction of confidence sets.
//!
//! The confidence set for the population solution set is found by iterating:
//! starting from the full grid `S_1`, compare the full-sample statistic
//! `T_n(S_j) = sup_{theta in S_j} sqrt(n) * Q_n(theta)` against the
//! `1 - alpha` empirical quantile `c(S_j)` of the matching subsample
//! statistics `sup_{theta in S_j} sqrt(b) * Q_{n,b,i}(theta)`. Accept and
//! stop when `T_n(S_j) <= c(S_j)`; otherwise shrink to
//! `S_{j+1} = {theta : sqrt(n) * Q_n(theta) <= c(S_j)}` and repeat.
//!
//! One subsample plan is drawn up front and reused across iterations. That
//! makes the quantiles monotone in the candidate set, which in turn makes the
//! iterates nested and guarantees termination on a finite grid: whenever the
//! stop test fails, the grid point attaining the sup is excluded.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::criterion_for_data;
use crate::grid::{GridFunction, ParamGrid, ParamSet};
use crate::objective::{Dataset, MinimaxProblem};
use crate::rng::rng_from;
use rand::Rng;

/// Subsample design: size rule `b = clamp(round(beta * n^kappa), 2, n-1)`,
/// the number of subsamples drawn, and the seed of the plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsampleConfig {
    pub beta: f64,
    pub kappa: f64,
    pub num_subsamples: usize,
    pub seed: u64,
}

impl SubsampleConfig {
    pub fn new(beta: f64, kappa: f64, num_subsamples: usize, seed: u64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidConfig(format!("subsample beta must be positive, got {beta}")));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::InvalidConfig(format!("subsample kappa must lie in (0,1), got {kappa}")));
        }
        if num_subsamples == 0 {
            return Err(Error::InvalidConfig("need at least one subsample".into()));
        }
        Ok(Self { beta, kappa, num_subsamples, seed })
    }

    /// Default rule `b = round(sqrt(n))` with 200 subsamples.
    pub fn default_rule(seed: u64) -> Self {
        Self { beta: 1.0, kappa: 0.5, num_subsamples: 200, seed }
    }

    /// Subsample size at sample size `n`, and whether the clamp to
    /// `[2, n-1]` was active.
    pub fn subsample_size(&self, n: usize) -> Result<(usize, bool)> {
        if n < 3 {
            return Err(Error::SampleTooSmall { context: "subsampling", n, minimum: 3 });
        }
        let raw = (self.beta * (n as f64).powf(self.kappa)).round();
        let b = raw.clamp(2.0, (n - 1) as f64) as usize;
        Ok((b, (raw as i64) != b as i64))
    }
}

/// Number of distinct size-`b` subsamples of `n` rows (binomial coefficient,
/// saturating at `u128::MAX`).
pub fn total_subsample_count(n: usize, b: usize) -> u128 {
    if b > n {
        return 0;
    }
    let b = b.min(n - b);
    let mut acc: u128 = 1;
    for k in 0..b {
        let num = (n - k) as u128;
        let den = (k + 1) as u128;
        acc = match acc.checked_mul(num) {
            Some(v) => v / den,
            None => return u128::MAX,
        };
    }
    acc
}

/// A drawn plan: `M` sorted index sets of common size `b`, each sampled
/// uniformly without replacement, independently across subsamples.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsamplePlan {
    subsample_size: usize,
    sample_size: usize,
    clamped: bool,
    index_sets: Vec<Vec<usize>>,
}

impl SubsamplePlan {
    pub fn subsample_size(&self) -> usize {
        self.subsample_size
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// True when the size rule had to be clamped into `[2, n-1]`.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn num_subsamples(&self) -> usize {
        self.index_sets.len()
    }

    pub fn index_set(&self, i: usize) -> &[usize] {
        &self.index_sets[i]
    }
}

/// Draw the subsample plan for `n` rows. Deterministic in
/// `(n, cfg.seed)`; subsample `i` depends only on `(cfg.seed, i)`.
pub fn draw_subsamples(n: usize, cfg: &SubsampleConfig) -> Result<SubsamplePlan> {
    let (b, clamped) = cfg.subsample_size(n)?;
    let index_sets: Vec<Vec<usize>> = (0..cfg.num_subsamples)
        .map(|i| {
            let mut rng = rng_from(cfg.seed, &[0x5B5A, i as u64]);
            // Partial Fisher-Yates: the first b entries form the subsample.
            let mut pool: Vec<usize> = (0..n).collect();
            for k in 0..b {
                let j = k + rng.gen_range(0..n - k);
                pool.swap(k, j);
            }
            let mut set = pool[..b].to_vec();
            set.sort_unstable();
            set
        })
        .collect();
    Ok(SubsamplePlan { subsample_size: b, sample_size: n, clamped, index_sets })
}

/// `scale * max_{theta in S} criterion(theta)`, the scaled sup statistic.
pub fn sup_statistic(criterion: &GridFunction, set: &ParamSet, scale: f64) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet { context: "sup_statistic" });
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::NonPositiveScale { value: scale });
    }
    let values = criterion.values();
    let mut max = f64::NEG_INFINITY;
    for (i, v) in values.iter().enumerate() {
        if set.contains(i) && *v > max {
            max = *v;
        }
    }
    Ok(scale * max)
}

/// Smallest order statistic `x` with `#{stats <= x} / M >= 1 - alpha`.
pub fn subsample_quantile(stats: &[f64], alpha: f64) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::EmptySample { context: "subsample_quantile" });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha { alpha });
    }
    let mut sorted = stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let level = 1.0 - alpha;
    for (j, &x) in sorted.iter().enumerate() {
        if (j + 1) as f64 / m >= level {
            return Ok(x);
        }
    }
    Ok(*sorted.last().expect("non-empty"))
}

/// Why the step-down loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The full-sample statistic passed the quantile test.
    Accepted,
    /// An iteration failed to shrink the candidate set. Cannot occur under
    /// exact arithmetic; guarded anyway.
    FixpointGuard,
}

/// One step-down iteration: the candidate set, its full-sample sup statistic,
/// and the subsample quantile it was tested against.
#[derive(Debug, Clone)]
pub struct StepDownIteration {
    pub set: ParamSet,
    pub sup_statistic: f64,
    pub quantile: f64,
}

/// Final confidence set plus the full step-down trace.
#[derive(Debug, Clone)]
pub struct ConfidenceResult {
    pub final_set: ParamSet,
    pub iterations: Vec<StepDownIteration>,
    pub alpha: f64,
    pub stop_reason: StopReason,
    pub sample_size: usize,
    pub subsample_size: usize,
    pub num_subsamples: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct IterationJson {
    cardinality: usize,
    sup_statistic: f64,
    quantile: f64,
}

#[derive(Serialize)]
struct ConfidenceJson<'a> {
    alpha: f64,
    n: usize,
    b: usize,
    num_subsamples: usize,
    seed: u64,
    stopped_reason: &'a StopReason,
    iterations: Vec<IterationJson>,
    final_set_indices: Vec<usize>,
}

impl ConfidenceResult {
    /// JSON trace: alpha, b, number of subsamples, seed, per-iteration
    /// records (cardinality, sup statistic, quantile), and the final set as
    /// sorted flat indices.
    pub fn to_json(&self) -> Result<String> {
        let doc = ConfidenceJson {
            alpha: self.alpha,
            n: self.sample_size,
            b: self.subsample_size,
            num_subsamples: self.num_subsamples,
            seed: self.seed,
            stopped_reason: &self.stop_reason,
            iterations: self
                .iterations
                .iter()
                .map(|it| IterationJson {
                    cardinality: it.set.cardinality(),
                    sup_statistic: it.sup_statistic,
                    quantile: it.quantile,
                })
                .collect(),
            final_set_indices: self.final_set.indices(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Run the step-down procedure and return the confidence set with its trace.
///
/// The full-sample criterion is computed once, the subsample plan is drawn
/// once, and the `M` subsample criterion surfaces are precomputed (in
/// parallel, reduced in index order) before the sequential shrink loop.
pub fn step_down_confidence_set(
    problem: &MinimaxProblem,
    data: &Dataset,
    grid: &Arc<ParamGrid>,
    alpha: f64,
    cfg: &SubsampleConfig,
) -> Result<ConfidenceResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha { alpha });
    }
    let n = data.n();
    let plan = draw_subsamples(n, cfg)?;
    let full = criterion_for_data(problem, data, grid)?;
    let subsample_criteria: Vec<GridFunction> = (0..plan.num_subsamples())
        .into_par_iter()
        .map(|i| {
            let rows = data.subset(plan.index_set(i))?;
            Ok(criterion_for_data(problem, &rows, grid)?.criterion)
        })
        .collect::<Result<Vec<_>>>()?;

    let scale_n = (n as f64).sqrt();
    let scale_b = (plan.subsample_size() as f64).sqrt();
    let mut current = ParamSet::full(Arc::clone(grid));
    let mut iterations = Vec::new();
    loop {
        let t = sup_statistic(&full.criterion, &current, scale_n)?;
        let stats: Vec<f64> = subsample_criteria
            .iter()
            .map(|q| sup_statistic(q, &current, scale_b))
            .collect::<Result<Vec<_>>>()?;
        let c = subsample_quantile(&stats, alpha)?;
        iterations.push(StepDownIteration { set: current.clone(), sup_statistic: t, quantile: c });

        if t <= c {
            return Ok(ConfidenceResult {
                final_set: current,
                iterations,
                alpha,
                stop_reason: StopReason::Accepted,
                sample_size: n,
                subsample_size: plan.subsample_size(),
                num_subsamples: plan.num_subsamples(),
                seed: cfg.seed,
            });
        }

        let mask: Vec<bool> =
            full.criterion.values().iter().map(|q| scale_n * *q <= c).collect();
        let next = ParamSet::from_mask(Arc::clone(grid), mask)?;
        if next.cardinality() >= current.cardinality() || next.is_empty() {
            return Ok(ConfidenceResult {
                final_set: current,
                iterations,
                alpha,
                stop_reason: StopReason::FixpointGuard,
                sample_size: n,
                subsample_size: plan.subsample_size(),
                num_subsamples: plan.num_subsamples(),
                seed: cfg.seed,
            });
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::criterion_surface;
    use crate::grid::{GridFunction, ParamBox};
    use crate::objective::{Dataset, KernelFn, MinimaxProblem, SamplerFn};
    use crate::testbed::{generate_dataset, two_point_grid, two_point_problem, TwoPointSpec};
    use proptest::prelude::*;

    #[test]
    fn binomial_counts() {
        assert_eq!(total_subsample_count(5, 2), 10);
        assert_eq!(total_subsample_count(5, 5), 1);
        assert_eq!(total_subsample_count(4, 5), 0);
        assert_eq!(total_subsample_count(60, 30), 118264581564861424);
    }

    #[test]
    fn plans_are_deterministic_and_sized() {
        let cfg = SubsampleConfig::new(1.0, 0.5, 8, 42).unwrap();
        let a = draw_subsamples(100, &cfg).unwrap();
        let b = draw_subsamples(100, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.subsample_size(), 10);
        for i in 0..a.num_subsamples() {
            let set = a.index_set(i);
            assert_eq!(set.len(), 10);
            assert!(set.windows(2).all(|w| w[0] < w[1]));
            assert!(set.iter().all(|&r| r < 100));
        }
    }

    #[test]
    fn single_pair_subsample() {
        let cfg = SubsampleConfig::new(1.0, 0.5, 1, 3).unwrap();
        let plan = draw_subsamples(3, &cfg).unwrap();
        assert_eq!(plan.num_subsamples(), 1);
        assert_eq!(plan.index_set(0).len(), 2);
        assert!(draw_subsamples(2, &cfg).is_err());
    }

    #[test]
    fn clamp_is_reported() {
        let cfg = SubsampleConfig::new(100.0, 0.9, 1, 0).unwrap();
        let plan = draw_subsamples(10, &cfg).unwrap();
        assert_eq!(plan.subsample_size(), 9);
        assert!(plan.clamped());
    }

    fn small_bundle(values: Vec<f64>) -> (Arc<ParamGrid>, crate::estimation::CriterionBundle) {
        let bounds = ParamBox::rect2((0.0, 1.0), (0.0, 1.0)).unwrap();
        let grid = ParamGrid::new(bounds, vec![2, 3]).unwrap();
        let surf = GridFunction::new_full(Arc::clone(&grid), values).unwrap();
        (grid, criterion_surface(surf).unwrap())
    }

    #[test]
    fn sup_statistic_examples() {
        let (grid, bundle) = small_bundle(vec![0.0, 1.0, 2.0, -1.0, 0.5, 3.0]);
        let zeros: Vec<usize> = bundle
            .criterion
            .values()
            .iter()
            .enumerate()
            .filter_map(|(i, q)| (*q == 0.0).then_some(i))
            .collect();
        let argmin = ParamSet::from_indices(Arc::clone(&grid), &zeros).unwrap();
        assert_eq!(sup_statistic(&bundle.criterion, &argmin, 7.0).unwrap(), 0.0);

        let small = ParamSet::from_indices(Arc::clone(&grid), &[0, 1]).unwrap();
        let large = ParamSet::full(Arc::clone(&grid));
        let s_small = sup_statistic(&bundle.criterion, &small, 2.0).unwrap();
        let s_large = sup_statistic(&bundle.criterion, &large, 2.0).unwrap();
        assert!(s_small <= s_large);
        let doubled = sup_statistic(&bundle.criterion, &large, 4.0).unwrap();
        assert_eq!(doubled, 2.0 * s_large);

        let empty = ParamSet::from_indices(grid, &[]).unwrap();
        assert!(sup_statistic(&bundle.criterion, &empty, 1.0).is_err());
        assert!(sup_statistic(&bundle.criterion, &large, 0.0).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(subsample_quantile(&[0.1, 0.2, 0.3, 0.4], 0.25).unwrap(), 0.3);
        assert_eq!(subsample_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(subsample_quantile(&[7.0; 9], 0.123).unwrap(), 7.0);
        assert!(subsample_quantile(&[], 0.5).is_err());
        assert!(subsample_quantile(&[1.0], 0.0).is_err());
        assert!(subsample_quantile(&[1.0], 1.0).is_err());
    }

    fn degenerate_problem() -> MinimaxProblem {
        let kernel: Arc<KernelFn> = Arc::new(|_, _, _, _| 0.0);
        let sampler: Arc<SamplerFn> = Arc::new(|n, _| {
            Dataset::new(vec![0.0; n], vec![0.0; n], 1, 1).unwrap()
        });
        let bounds = ParamBox::rect2((0.0, 1.0), (0.0, 1.0)).unwrap();
        MinimaxProblem::new(bounds, 1, 1, kernel, sampler)
    }

    #[test]
    fn degenerate_kernel_accepts_full_grid_immediately() {
        let problem = degenerate_problem();
        let grid = ParamGrid::new(problem.bounds().clone(), vec![4, 4]).unwrap();
        let data = problem.sample(20, 0).unwrap();
        let cfg = SubsampleConfig::new(1.0, 0.5, 16, 1).unwrap();
        let result = step_down_confidence_set(&problem, &data, &grid, 0.1, &cfg).unwrap();
        assert_eq!(result.stop_reason, StopReason::Accepted);
        assert_eq!(result.iterations.len(), 1);
        assert_eq!(result.final_set.cardinality(), grid.total_points());
        assert_eq!(result.iterations[0].sup_statistic, 0.0);
    }

    #[test]
    fn step_down_trace_is_nested_and_strictly_shrinking() {
        let spec = TwoPointSpec::new(1.0, 0.2).unwrap();
        let problem = two_point_problem(&spec);
        let grid = two_point_grid(&spec, 21).unwrap();
        let data = generate_dataset(&problem, 400, 11).unwrap();
        let cfg = SubsampleConfig::new(1.0, 0.5, 60, 5).unwrap();
        let result = step_down_confidence_set(&problem, &data, &grid, 0.1, &cfg).unwrap();
        assert_eq!(result.stop_reason, StopReason::Accepted);
        assert!(!result.final_set.is_empty());
        assert_eq!(result.iterations[0].set.cardinality(), grid.total_points());
        for w in result.iterations.windows(2) {
            assert!(w[1].set.is_subset_of(&w[0].set).unwrap());
            assert!(w[1].set.cardinality() < w[0].set.cardinality());
            assert!(w[1].quantile <= w[0].quantile);
        }
        // Zero-criterion points of the full-sample surface survive to the end.
        let full = criterion_for_data(&problem, &data, &grid).unwrap();
        for (i, q) in full.criterion.values().iter().enumerate() {
            if *q == 0.0 {
                assert!(result.final_set.contains(i));
            }
        }
    }

    #[test]
    fn trace_serializes_to_json() {
        let problem = degenerate_problem();
        let grid = ParamGrid::new(problem.bounds().clone(), vec![3, 3]).unwrap();
        let data = problem.sample(10, 0).unwrap();
        let cfg = SubsampleConfig::new(1.0, 0.5, 4, 9).unwrap();
        let result = step_down_confidence_set(&problem, &data, &grid, 0.25, &cfg).unwrap();
        let json = result.to_json().unwrap();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["alpha"], 0.25);
        assert_eq!(doc["b"], 3);
        assert_eq!(doc["stopped_reason"], "accepted");
        assert_eq!(doc["final_set_indices"].as_array().unwrap().len(), 9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn quantile_satisfies_cdf_bounds(
            stats in prop::collection::vec(0.0..10.0f64, 1..40),
            alpha in 0.01..0.99f64,
        ) {
            let c = subsample_quantile(&stats, alpha).unwrap();
            let m = stats.len() as f64;
            let level = 1.0 - alpha;
            let at_c = stats.iter().filter(|s| **s <= c).count() as f64 / m;
            prop_assert!(at_c >= level);
            for &x in &stats {
                if x < c {
                    let at_x = stats.iter().filter(|s| **s <= x).count() as f64 / m;
                    prop_assert!(at_x < level);
                }
            }
        }

        #[test]
        fn quantiles_monotone_in_set_under_shared_plan(
            values in prop::collection::vec(0.0..4.0f64, 6 * 8),
            alpha in 0.05..0.95f64,
        ) {
            // Simulate a shared plan: the same criterion surfaces evaluated
            // on a set and a superset.
            let bounds = ParamBox::rect2((0.0, 1.0), (0.0, 1.0)).unwrap();
            let grid = ParamGrid::new(bounds, vec![2, 3]).unwrap();
            let surfaces: Vec<GridFunction> = values
                .chunks(6)
                .map(|c| GridFunction::new_full(Arc::clone(&grid), c.to_vec()).unwrap())
                .collect();
            let sub = ParamSet::from_indices(Arc::clone(&grid), &[0, 2, 4]).unwrap();
            let sup = ParamSet::full(Arc::clone(&grid));
            let stats_sub: Vec<f64> = surfaces
                .iter()
                .map(|s| sup_statistic(s, &sub, 1.5).unwrap())
                .collect();
            let stats_sup: Vec<f64> = surfaces
                .iter()
                .map(|s| sup_statistic(s, &sup, 1.5).unwrap())
                .collect();
            let c_sub = subsample_quantile(&stats_sub, alpha).unwrap();
            let c_sup = subsample_quantile(&stats_sup, alpha).unwrap();
            prop_assert!(c_sub <= c_sup);
        }
    }
}
