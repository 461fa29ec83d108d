//! Concrete minimax problems with known ground truth.
//!
//! Two testbeds back every experiment:
//!
//! * the **two-point** problem, a scalar quadratic kernel whose population
//!   objective, max-function, optimal value, solution pair, and limit
//!   covariance all have closed forms;
//! * the **logistic** problem, an affine generator against a logistic
//!   discriminator with Gaussian data, whose population objective is only
//!   available through Monte Carlo.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimation::{criterion_surface, solution_set};
use crate::grid::{ParamBox, ParamGrid, ParamSet};
use crate::objective::{
    population_surface, Dataset, KernelFn, MinimaxProblem, MonteCarloFallback, SamplerFn,
};
use crate::rng::{rng_from, standard_normal, uniform_open};

/// Scalar quadratic testbed.
///
/// Kernel: `F(x, z, gamma, delta) = -(delta - x*gamma)^2 + (gamma^2 - 1)^2`
/// with `X ~ N(mu, sigma^2)` and `Z ~ U[0, 1]` (unused by the kernel).
///
/// Closed forms, writing `g = sqrt(1 + sigma^2/2)`:
///
/// * population objective `f(gamma, delta) = -(delta - mu*gamma)^2
///   - sigma^2*gamma^2 + (gamma^2 - 1)^2`
/// * max-function `phi(gamma) = -sigma^2*gamma^2 + (gamma^2 - 1)^2`
/// * optimal value `V0 = -sigma^2 - sigma^4/4`
/// * solution set `{(g, mu*g), (-g, -mu*g)}` — two solutions with distinct
///   gamma blocks, and distinct delta blocks iff `mu != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl TwoPointSpec {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "two-point spec needs finite mu and sigma >= 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// `g = sqrt(1 + sigma^2/2)`, the magnitude of the solution gammas.
    pub fn margin(&self) -> f64 {
        (1.0 + self.sigma * self.sigma / 2.0).sqrt()
    }

    /// The two population solutions `(g, mu*g)` and `(-g, -mu*g)`.
    pub fn solutions(&self) -> Vec<Vec<f64>> {
        let g = self.margin();
        vec![vec![g, self.mu * g], vec![-g, -(self.mu * g)]]
    }

    /// Whether the two solutions have distinct delta coordinates.
    pub fn distinct_solutions(&self) -> bool {
        self.mu != 0.0
    }

    /// Symmetric box `[-2g, 2g] x [-2*max(|mu|,1)*g, 2*max(|mu|,1)*g]`,
    /// containing the solutions with a factor-two margin. The delta width
    /// falls back to the gamma width when `mu = 0` so the box keeps a
    /// non-empty interior.
    pub fn bounds(&self) -> ParamBox {
        let g = self.margin();
        let half_gamma = 2.0 * g;
        let half_delta = 2.0 * self.mu.abs().max(1.0) * g;
        ParamBox::rect2((-half_gamma, half_gamma), (-half_delta, half_delta))
            .expect("two-point box is always valid")
    }

    pub fn population_value(&self, gamma: f64, delta: f64) -> f64 {
        let r = delta - self.mu * gamma;
        let s = gamma * gamma - 1.0;
        -r * r - self.sigma * self.sigma * gamma * gamma + s * s
    }

    pub fn max_function_value(&self, gamma: f64) -> f64 {
        let s = gamma * gamma - 1.0;
        -self.sigma * self.sigma * gamma * gamma + s * s
    }

    pub fn optimal_value(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        -s2 - s2 * s2 / 4.0
    }

    /// Population criterion in closed form.
    pub fn criterion_value(&self, gamma: f64, delta: f64) -> f64 {
        let phi = self.max_function_value(gamma);
        (phi - self.population_value(gamma, delta)).max(phi - self.optimal_value())
    }

    /// Closed-form covariance of the kernel at two parameter points. With
    /// `A_k = delta_k - X*gamma_k` jointly Gaussian,
    /// `Cov(A_j^2, A_k^2) = 2 c^2 + 4 m_j m_k c` where `c = gamma_j*gamma_k*
    /// sigma^2` and `m_k = delta_k - mu*gamma_k`.
    pub fn kernel_covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        let s2 = self.sigma * self.sigma;
        let c = a[0] * b[0] * s2;
        let ma = a[1] - self.mu * a[0];
        let mb = b[1] - self.mu * b[0];
        2.0 * c * c + 4.0 * ma * mb * c
    }
}

/// Two-point problem with its analytic population oracle and known solutions.
pub fn two_point_problem(spec: &TwoPointSpec) -> MinimaxProblem {
    let kernel: Arc<KernelFn> = Arc::new(|x, _z, gamma, delta| {
        let r = delta[0] - x[0] * gamma[0];
        let s = gamma[0] * gamma[0] - 1.0;
        -r * r + s * s
    });
    let s = *spec;
    let sampler: Arc<SamplerFn> = Arc::new(move |n, seed| {
        let mut x = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = rng_from(seed, &[i as u64]);
            x.push(s.mu + s.sigma * standard_normal(&mut rng));
            z.push(uniform_open(&mut rng));
        }
        Dataset::new(x, z, 1, 1).expect("two-point sampler rows")
    });
    let pop_spec = *spec;
    MinimaxProblem::new(spec.bounds(), 1, 1, kernel, sampler)
        .with_population(Arc::new(move |gamma: &[f64], delta: &[f64]| {
            pop_spec.population_value(gamma[0], delta[0])
        }))
        .with_known_solutions(spec.solutions())
}

/// Grid for two-point experiments. `points_per_axis` must be `1 (mod 4)` and
/// at least 5, which places the solution coordinates `(+-g, +-mu*g)` on grid
/// nodes (their indices are at quarter positions of each symmetric axis).
pub fn two_point_grid(spec: &TwoPointSpec, points_per_axis: usize) -> Result<Arc<ParamGrid>> {
    if points_per_axis < 5 || points_per_axis % 4 != 1 {
        return Err(Error::InvalidConfig(format!(
            "two-point grids need points_per_axis = 1 (mod 4), >= 5; got {points_per_axis}"
        )));
    }
    ParamGrid::new(spec.bounds(), vec![points_per_axis, points_per_axis])
}

/// Variant of the two-point kernel with a unique population solution:
/// `F(x, z, gamma, delta) = -(delta - x*gamma)^2 + (gamma - 1)^2`, so
/// `phi(gamma) = -sigma^2*gamma^2 + (gamma - 1)^2` is strictly convex for
/// `sigma < 1` with the single interior minimizer `gamma0 = 1/(1 - sigma^2)`
/// and `delta0 = mu*gamma0`. Exercises the degenerate singleton-solution
/// case of the limit machinery. Requires `sigma^2 < 1/2` so the minimizer
/// stays inside the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePointSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl SinglePointSpec {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 || sigma * sigma >= 0.5 {
            return Err(Error::InvalidConfig(format!(
                "single-point spec needs finite mu and 0 <= sigma^2 < 1/2, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn solution(&self) -> Vec<f64> {
        let g = 1.0 / (1.0 - self.sigma * self.sigma);
        vec![g, self.mu * g]
    }

    pub fn bounds(&self) -> ParamBox {
        let half = 2.0 * self.mu.abs().max(1.0);
        ParamBox::rect2((-2.0, 2.0), (-half, half)).expect("single-point box is always valid")
    }

    pub fn population_value(&self, gamma: f64, delta: f64) -> f64 {
        let r = delta - self.mu * gamma;
        let s = gamma - 1.0;
        -r * r - self.sigma * self.sigma * gamma * gamma + s * s
    }
}

/// Single-solution problem with its analytic oracle and known solution.
pub fn single_point_problem(spec: &SinglePointSpec) -> MinimaxProblem {
    let kernel: Arc<KernelFn> = Arc::new(|x, _z, gamma, delta| {
        let r = delta[0] - x[0] * gamma[0];
        let s = gamma[0] - 1.0;
        -r * r + s * s
    });
    let s = *spec;
    let sampler: Arc<SamplerFn> = Arc::new(move |n, seed| {
        let mut x = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = rng_from(seed, &[i as u64]);
            x.push(s.mu + s.sigma * standard_normal(&mut rng));
            z.push(uniform_open(&mut rng));
        }
        Dataset::new(x, z, 1, 1).expect("single-point sampler rows")
    });
    let pop = *spec;
    MinimaxProblem::new(spec.bounds(), 1, 1, kernel, sampler)
        .with_population(Arc::new(move |gamma: &[f64], delta: &[f64]| {
            pop.population_value(gamma[0], delta[0])
        }))
        .with_known_solutions(vec![spec.solution()])
}

/// Affine-generator / logistic-discriminator testbed.
///
/// Generator `G(z, gamma) = gamma_1 + gamma_2 * z`, discriminator
/// `D(x, delta) = 1 / (1 + exp(-(delta_1 + delta_2 * x)))`, kernel
/// `F = ln D(x, delta) + ln(1 - D(G(z, gamma), delta))`, with
/// `X ~ N(x_mean, x_std^2)` and `Z ~ U[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticGanSpec {
    pub x_mean: f64,
    pub x_std: f64,
    pub bounds: ParamBox,
}

impl LogisticGanSpec {
    pub fn new(x_mean: f64, x_std: f64, bounds: ParamBox) -> Result<Self> {
        if !x_mean.is_finite() || !x_std.is_finite() || x_std <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "logistic spec needs finite x_mean and x_std > 0, got {x_mean}, {x_std}"
            )));
        }
        if bounds.gamma_dim() != 2 || bounds.delta_dim() != 2 {
            return Err(Error::InvalidConfig(
                "logistic spec needs a 2+2 dimensional box".into(),
            ));
        }
        Ok(Self { x_mean, x_std, bounds })
    }

    /// Default compact rectangle `[-1, 1]^2 x [-1, 1]^2`.
    pub fn default_box() -> ParamBox {
        ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, 1.0])
            .expect("default logistic box")
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Logistic sigmoid, strictly inside (0, 1) for finite input.
pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Logistic-discriminator problem. No analytic population oracle: population
/// surfaces use the seeded Monte Carlo fallback.
pub fn logistic_gan_problem(x_mean: f64, x_std: f64, bounds: ParamBox) -> Result<MinimaxProblem> {
    let spec = LogisticGanSpec::new(x_mean, x_std, bounds)?;
    // ln D(x) = -softplus(-(d1 + d2 x)); ln(1 - D(u)) = -softplus(d1 + d2 u).
    let kernel: Arc<KernelFn> = Arc::new(|x, z, gamma, delta| {
        let real_score = delta[0] + delta[1] * x[0];
        let fake = gamma[0] + gamma[1] * z[0];
        let fake_score = delta[0] + delta[1] * fake;
        -softplus(-real_score) - softplus(fake_score)
    });
    let (m, s) = (spec.x_mean, spec.x_std);
    let sampler: Arc<SamplerFn> = Arc::new(move |n, seed| {
        let mut x = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = rng_from(seed, &[i as u64]);
            x.push(m + s * standard_normal(&mut rng));
            z.push(uniform_open(&mut rng));
        }
        Dataset::new(x, z, 1, 1).expect("logistic sampler rows")
    });
    Ok(MinimaxProblem::new(spec.bounds, 1, 1, kernel, sampler))
}

/// Brute-force solution set of the Monte Carlo population surface on a fine
/// grid: the exact argmin structure of the tabulated criterion. Deterministic
/// for a fixed budget seed, so repeated calls reproduce the set bit-for-bit.
pub fn logistic_brute_force_solutions(
    problem: &MinimaxProblem,
    counts: Vec<usize>,
    mc: MonteCarloFallback,
) -> Result<(ParamSet, Arc<ParamGrid>)> {
    let grid = ParamGrid::new(problem.bounds().clone(), counts)?;
    let pop = population_surface(problem, &grid, Some(mc))?;
    let bundle = criterion_surface(pop.surface)?;
    let set = solution_set(&bundle, 0.0)?;
    Ok((set, grid))
}

/// Draw `n` paired rows from the problem's sampler; deterministic per seed,
/// and row `i` depends only on `(seed, i)`.
pub fn generate_dataset(problem: &MinimaxProblem, n: usize, seed: u64) -> Result<Dataset> {
    problem.sample(n, seed)
}
