//! Least-squares model averaging over nested regressions.
//!
//! Two estimators pick simplex weights over the fitted values of a nested
//! family of least-squares models:
//!
//! - MMA minimizes the Mallows criterion `||y - mu(W)||^2 + 2 s2 K'W`;
//! - MSA adds a common shift `alpha` to the average and minimizes
//!   `||y - mu(W) - alpha||^2 + 2 s2 K'W` jointly in `(W, alpha)`, which removes
//!   location bias that no average of the nested fits can.
//!
//! The [`simulation`] module runs the Monte Carlo risk comparison of the two,
//! and [`verify`] bundles the invariant suites used by the command line tool.

pub mod criterion;
pub mod error;
pub mod optimizer;
pub mod regression;
pub mod simplex;
pub mod simulation;
pub mod verify;

pub use criterion::{build_qp, mma_criterion, msa_criterion, profiled_alpha, QpProblem};
pub use error::{Error, Result};
pub use optimizer::{grid_oracle, solve_mma, solve_msa, solve_simplex_qp, AveragingSolution, DEFAULT_TOL};
pub use regression::{averaged_fit, fit_nested_models, Dataset, ModelFits, NestedModelSpec};
pub use simulation::{run_experiment, simulate_dataset, RiskReport, SimulationConfig};
