//! Set-valued estimation and subsampling confidence sets for sample minimax
//! problems of generator/discriminator (GAN) type.
//!
//! The population problem `inf_gamma sup_delta E[F(X, Z, gamma, delta)]`
//! typically has several solutions. This crate estimates the full solution
//! set from a sample, measures estimation error in Hausdorff distance, and
//! builds confidence sets that cover the population solution set via a
//! step-down procedure driven by subsample quantiles.
//!
//! Everything operates on a finite rectangular grid over the compact
//! parameter box, so suprema and infima are exact maxima and minima, and all
//! randomness is derived deterministically from explicit seeds.
//!
//! ```
//! use ganinfer::estimation::{criterion_for_data, solution_set, SlacknessRule};
//! use ganinfer::testbed::{generate_dataset, two_point_grid, two_point_problem, TwoPointSpec};
//!
//! let spec = TwoPointSpec::new(1.0, 0.2).unwrap();
//! let problem = two_point_problem(&spec);
//! let grid = two_point_grid(&spec, 21).unwrap();
//! let data = generate_dataset(&problem, 500, 7).unwrap();
//! let bundle = criterion_for_data(&problem, &data, &grid).unwrap();
//! let rule = SlacknessRule::default_rate();
//! let estimate = solution_set(&bundle, rule.tau(data.n())).unwrap();
//! assert!(!estimate.is_empty());
//! ```
//!
//! The `examples/` directory walks through each capability; the `ganinfer`
//! binary exposes the experiment runner on the command line.

pub mod asymptotics;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod grid;
pub mod objective;
pub mod rng;
pub mod subsampling;
pub mod testbed;

pub use error::{Error, Result};
pub use estimation::{CriterionBundle, SlacknessRule};
pub use grid::{GridFunction, ParamBox, ParamGrid, ParamSet};
pub use objective::{Dataset, MinimaxProblem};
pub use subsampling::{ConfidenceResult, SubsampleConfig, SubsamplePlan};
