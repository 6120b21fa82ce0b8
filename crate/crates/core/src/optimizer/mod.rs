//! Weight selection: minimize the MMA or MSA criterion over the simplex.

mod grid;
mod qp;

pub(crate) use grid::for_each_composition;
pub use grid::{default_alpha_grid, grid_oracle, grid_size, GRID_LIMIT};
pub use qp::{
    kkt_residual, largest_eigenvalue, solve_simplex_qp, solve_simplex_qp_from, solve_simplex_qp_traced,
};

use serde::{Deserialize, Serialize};

use crate::criterion::{build_qp, mma_criterion, msa_criterion, profiled_alpha};
use crate::error::{Error, Result};
use crate::regression::ModelFits;

/// Default stationarity tolerance (relative projected-gradient norm).
pub const DEFAULT_TOL: f64 = 1e-9;

/// Weights, shift and achieved criterion value of an averaging estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingSolution {
    pub weights: Vec<f64>,
    /// Zero for MMA.
    pub alpha: f64,
    pub criterion_value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// False when the iteration cap was reached first; the fields then hold the best iterate.
    pub converged: bool,
}

impl AveragingSolution {
    /// Turns an unconverged solution into [`Error::NonConvergence`].
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence { iterations: self.iterations, kkt_residual: self.kkt_residual })
        }
    }
}

/// Mallows model averaging weights.
pub fn solve_mma(fits: &ModelFits, sigma2: f64, tol: f64) -> Result<AveragingSolution> {
    let problem = build_qp(fits, sigma2, false)?;
    let mut sol = solve_simplex_qp(&problem, tol)?;
    sol.criterion_value = mma_criterion(fits, &sol.weights, sigma2)?;
    Ok(sol)
}

/// Mean-shift Mallows weights and shift.
///
/// Starts from the MMA solution; since the profiled criterion never exceeds the
/// MMA criterion at the same weights and the solver never ascends, the result
/// satisfies `min C(W, alpha) <= min C(W)` for any tolerance.
pub fn solve_msa(fits: &ModelFits, sigma2: f64, tol: f64) -> Result<AveragingSolution> {
    let mma = solve_mma(fits, sigma2, tol)?;
    solve_msa_from(fits, sigma2, tol, &mma.weights)
}

/// Mean-shift solve warm-started at `start`.
pub fn solve_msa_from(fits: &ModelFits, sigma2: f64, tol: f64, start: &[f64]) -> Result<AveragingSolution> {
    let problem = build_qp(fits, sigma2, true)?;
    let mut sol = solve_simplex_qp_from(&problem, tol, start)?;
    sol.alpha = profiled_alpha(fits, &sol.weights)?;
    sol.criterion_value = msa_criterion(fits, &sol.weights, sol.alpha, sigma2)?;
    Ok(sol)
}
